"""Stub parser: prints a line, then hangs on files containing HANG."""
import sys
import time

text = open(sys.argv[1], encoding="utf-8", errors="replace").read()
print("started", flush=True)
if "HANG" in text:
    time.sleep(60)
