"""Python bindings for the maskcheck verification core.

The heavy lifting lives in the compiled `_maskcheck` module; this package
re-exports its surface:

    verify(netlist_json, labels_json, ...) -> report JSON text
    summarize(report_json)                 -> human-readable table
    oracle(netlist_json, labels_json, wire_name) -> distribution verdicts
    corpus_gen(kind, q=17, width=0)        -> reference gadget bundle
    selfcheck(), proof_obligations()       -> known-answer suites
    netlist_info(netlist_json)             -> parsed module facts
"""

try:
    # Installed wheel: the extension sits inside the package.
    from ._maskcheck import (  # noqa: F401
        MaskcheckError,
        __version__,
        corpus_gen,
        netlist_info,
        oracle,
        proof_obligations,
        selfcheck,
        summarize,
        verify,
    )
except ImportError:
    # CMake build tree on PYTHONPATH.
    from _maskcheck import (  # noqa: F401
        MaskcheckError,
        __version__,
        corpus_gen,
        netlist_info,
        oracle,
        proof_obligations,
        selfcheck,
        summarize,
        verify,
    )
