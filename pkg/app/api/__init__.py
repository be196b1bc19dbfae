"""API routes and endpoints."""

