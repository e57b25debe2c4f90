"""unittest suites for sbstcompact; ``tests._path`` puts ``src`` on sys.path."""
