"""Sequencing helpers"""
