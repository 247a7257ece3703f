"""Smoke tests for the python bindings.

Runs against the installed `fabrid` package, or, when invoked from a source
checkout, against the `_fabrid` module in the CMake build directory.
"""

import json
import sys
from pathlib import Path

import pytest

try:
    import fabrid
except ImportError:  # fall back to the in-tree build
    build = Path(__file__).resolve().parents[2] / "build"
    sys.path.insert(0, str(build))
    import _fabrid as fabrid


RTT_TOPOLOGY = json.dumps(
    {
        "seed": 3,
        "ases": [
            {
                "id": "1-1",
                "core": True,
                "routes": [
                    {"route_id": "std", "latency_ms": 10, "indices": [0]},
                    {"route_id": "fast", "latency_ms": 5, "indices": [1]},
                ],
                "announce": [1],
                "dmap": {"1": {"scope": "global", "pid": 1}},
            },
            {
                "id": "1-2",
                "routes": [
                    {"route_id": "std", "latency_ms": 10, "indices": [0]},
                    {"route_id": "fast", "latency_ms": 5, "indices": [1]},
                ],
                "announce": [1],
                "dmap": {"1": {"scope": "global", "pid": 1}},
            },
        ],
        "links": [
            {"a": "1-1", "b": "1-2", "a_if": 1, "b_if": 1, "latency_ms": 5}
        ],
        "policies": [
            {
                "scope": "global",
                "pid": 1,
                "text": 'const i1: I = "https://a.example"\n'
                "exists c: C. (software(r, c) & issuer(tag(c)) = i1)",
            }
        ],
    }
)


def test_prf_reference_vectors():
    zero = bytes(16)
    assert fabrid.prf(zero, b"").hex() == "3ad78e726c1ec02b7ebfe92b23d9ec34"
    seq = bytes(range(16))
    assert fabrid.prf(seq, b"").hex() == "4399572cd6ea5341b8d35876a7098af7"
    assert fabrid.prf(seq, b"abc").hex() == "dbd0b134c556c3779d5f113fd277b3d8"
    assert fabrid.prf(seq, bytes(range(48))).hex() == (
        "c5b089e3e4710856581f28b42824c651"
    )


def test_keystream_and_digest_vectors():
    zero = bytes(16)
    assert fabrid.keystream(zero, 0).hex() == "66e94bd4ef8a2c3b884cfa59ca342b2e"
    assert fabrid.keystream(zero, 1).hex() == "788bcd111ecf73d4e78d2e21bef55460"
    assert fabrid.digest16(b"abc").hex() == "ba7816bf8f01cfea414140de5dae2223"
    assert fabrid.digest16(b"").hex() == "e3b0c44298fc1c149afbf4c8996fb924"


def test_host_key_derivation_is_deterministic():
    secret = bytes([0x2F] * 16)
    k1 = fabrid.derive_host_key(secret, "3-77", "1-42", "172.16.0.4")
    k2 = fabrid.derive_host_key(secret, "3-77", "1-42", "172.16.0.4")
    assert k1 == k2
    assert len(k1) == 16
    assert k1 != fabrid.derive_host_key(secret, "3-77", "1-42", "172.16.0.5")


def test_map_sizes_match_calibration():
    assert fabrid.map_sizes(500, 100, 100, 5) == (7500, 2200, 800, 18)


def test_policy_round_trip_and_evaluation():
    pol = fabrid.parse_policy(
        'const i1: I = "https://a.example"\n'
        "exists c: C. (software(r, c) & issuer(tag(c)) = i1)"
    )
    again = fabrid.parse_policy(pol.pretty())
    assert again.pretty() == pol.pretty()

    setup = json.dumps(
        {
            "router_id": "r1",
            "manufacturer": 7,
            "software": [
                {
                    "tagId": "t1",
                    "tagIssuer": "https://a.example",
                    "name": "osd",
                    "version": "1.2.3",
                }
            ],
        }
    )
    assert fabrid.eval_router_policy(pol, setup)
    bad = setup.replace("a.example", "b.example")
    assert not fabrid.eval_router_policy(pol, bad)


def test_containment_verdicts_and_witness():
    strong = fabrid.parse_policy(
        'const i1: I = "https://a.example"\nconst n1: N = "osd"\n'
        "exists c: C. (software(r, c) & issuer(tag(c)) = i1 & name(c) = n1)"
    )
    weak = fabrid.parse_policy(
        'const i1: I = "https://a.example"\n'
        "exists c: C. (software(r, c) & issuer(tag(c)) = i1)"
    )
    res = fabrid.check_containment(strong, weak)
    assert res["kind"] == "Contained"
    assert res["fast_path"]

    rev = fabrid.check_containment(weak, strong)
    assert rev["kind"] == "NotContained"
    witness = rev["witness"]
    assert fabrid.eval_router_policy(weak, witness)
    assert not fabrid.eval_router_policy(strong, witness)


def test_rtt_simulation_is_deterministic():
    topo_a = fabrid.load_topology_text(RTT_TOPOLOGY)
    topo_b = fabrid.load_topology_text(RTT_TOPOLOGY)
    run_a = fabrid.run_rtt(topo_a, ["1-1", "1-2"], 0, 5)
    run_b = fabrid.run_rtt(topo_b, ["1-1", "1-2"], 0, 5)
    assert run_a == run_b
    assert len(run_a) == 5
    # jitter-free: 2 link traversals (10) + both routes twice (40)
    for _, index, rtt in run_a:
        assert index == 0
        assert rtt == pytest.approx(50.0)


def test_bad_inputs_raise():
    with pytest.raises(Exception):
        fabrid.parse_policy("manu(r) = ")
    with pytest.raises(Exception):
        fabrid.load_topology_text("not json")
