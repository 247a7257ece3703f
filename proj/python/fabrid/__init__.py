from ._fabrid import (
    prf,
    keystream,
    digest16,
    derive_host_key,
    parse_policy,
    eval_router_policy,
    check_containment,
    map_sizes,
    load_topology_text,
    run_rtt,
)

__all__ = [
    "prf",
    "keystream",
    "digest16",
    "derive_host_key",
    "parse_policy",
    "eval_router_policy",
    "check_containment",
    "map_sizes",
    "load_topology_text",
    "run_rtt",
]
