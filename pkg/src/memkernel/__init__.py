"""memkernel: a memory operating system for LLM-centric applications.

Models plaintext, activation (KV-cache), and parameter memory as uniform,
schedulable MemCube resources with full lifecycle, governance, hybrid
retrieval, policy-aware scheduling, portable interchange, and an append-only
audit trail. Exposed as a library, a daemon gateway, and the `memctl` CLI.
"""

__version__ = "0.1.0"
