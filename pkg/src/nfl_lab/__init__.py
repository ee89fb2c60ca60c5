"""Desk-scale simulation of quantum and classical no-free-lunch bounds."""

__version__ = "0.1.0"
