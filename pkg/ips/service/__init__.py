"""
Service Package
Line-protocol localization server and client
"""
