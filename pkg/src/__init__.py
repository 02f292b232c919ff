"""
Bessel Exit-Time Toolkit
Source code modules
"""
