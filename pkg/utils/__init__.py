"""Utility modules package: logging, errors, configuration and reports"""
