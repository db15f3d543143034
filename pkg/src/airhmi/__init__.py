"""airhmi: a touchless gesture-to-cursor human-machine interface.

Hand frames (synthetic, replayed, or streamed from a browser) flow into a
server-side gesture recognizer and stabilizer, which broadcasts compact
cursor commands over WebSocket to clients maintaining a virtual cursor.
"""

__version__ = "0.1.0"
