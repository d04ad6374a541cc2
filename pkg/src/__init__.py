# src/__init__.py
"""Two-grid finite element package"""
