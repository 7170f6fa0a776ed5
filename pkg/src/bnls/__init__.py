"""Bäcklund-extension solution toolkit for the focusing NLS equation with a delta potential."""
