"""Hot-kernel backends: compiled extension plus pure-Python fallback."""
