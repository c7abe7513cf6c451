"""Stub parser: reports the text encoding."""
import sys

raw = open(sys.argv[1], "rb").read()
try:
    raw.decode("ascii")
    print("encoding: ASCII")
except UnicodeDecodeError:
    print("encoding: UTF-8")
