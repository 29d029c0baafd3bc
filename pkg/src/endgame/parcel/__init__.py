"""Parcel delivery model: synthetic corpus, zoning, routing, and the
online assignment policies."""
