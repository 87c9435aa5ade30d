"""mcpguard: audit toolkit and guard proxy for the MCP ecosystem.

Two halves share one data model:

* an auditor pipeline (``snapshot`` / ``resolve`` / ``extract`` / ``scan`` /
  ``report``) that turns registry snapshots, hosting probes, and extracted
  tool metadata into findings, and
* a guard proxy (``proxy``) that sits between an MCP host and its servers
  and enforces the verification hosts skip: liveness checks, collision-safe
  name resolution, metadata pinning, result screening, and per-tool policy.
"""

__version__ = "0.1.0"
