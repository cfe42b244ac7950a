# app/api/routes/__init__.py
"""
API route handlers
"""