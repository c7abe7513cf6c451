"""Stub parser: complains about semicolons, fails on files containing BAD."""
import sys

text = open(sys.argv[1], encoding="utf-8", errors="replace").read()
if ";" in text:
    print("warning: semicolon delimiter", file=sys.stderr)
if "BAD" in text:
    print("Parse error at line 1")
    sys.exit(2)
print("ok")
