#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "fabrid/control.hpp"
#include "fabrid/data_plane.hpp"
#include "fabrid/drkey.hpp"
#include "fabrid/policy.hpp"
#include "fabrid/sim.hpp"

namespace py = pybind11;
using namespace fabrid;

namespace {

crypto::SymKey key_from(py::bytes b) {
    std::string s = b;
    if (s.size() != 16) throw py::value_error("key must be 16 bytes");
    crypto::SymKey k;
    std::copy(s.begin(), s.end(), reinterpret_cast<char*>(k.bytes.data()));
    return k;
}

std::span<const uint8_t> as_span(const std::string& s) {
    return {reinterpret_cast<const uint8_t*>(s.data()), s.size()};
}

py::bytes to_py(std::span<const uint8_t> b) {
    return py::bytes(reinterpret_cast<const char*>(b.data()), b.size());
}

const char* kind_name(policy::ContainmentKind k) {
    switch (k) {
        case policy::ContainmentKind::Contained: return "Contained";
        case policy::ContainmentKind::NotContained: return "NotContained";
        case policy::ContainmentKind::Unknown: return "Unknown";
    }
    return "?";
}

}  // namespace

PYBIND11_MODULE(_fabrid, m) {
    m.doc() = "policy-aware inter-domain routing core";

    m.def("prf", [](py::bytes key, py::bytes data) {
        std::string d = data;
        return to_py(crypto::prf(key_from(key), as_span(d)));
    });
    m.def("keystream", [](py::bytes key, uint64_t ts) {
        return to_py(crypto::keystream(key_from(key), ts));
    });
    m.def("digest16", [](py::bytes data) {
        std::string d = data;
        return to_py(crypto::digest16(as_span(d)).bytes);
    });

    m.def("derive_host_key",
          [](py::bytes secret, const std::string& owner, const std::string& src_as,
             const std::string& src_host) {
              drkey::AsSecret s{key_from(secret), drkey::AsId::parse(owner)};
              auto k = drkey::router_rederive(s, drkey::AsId::parse(src_as),
                                              drkey::HostAddr::parse(src_host));
              return to_py(k.key.bytes);
          },
          "stateless border-router key for (source AS, source host)");

    py::class_<policy::Policy>(m, "Policy")
        .def("pretty", [](const policy::Policy& p) { return pretty_print(p); });
    m.def("parse_policy", &policy::parse_policy);
    m.def("eval_router_policy", [](const policy::Policy& p, const std::string& setup) {
        return policy::eval_router_policy(p, policy::decode_router_setup(setup));
    });
    m.def("check_containment",
          [](const policy::Policy& a, const policy::Policy& b, size_t k) {
              policy::ContainmentBounds bounds;
              bounds.max_stack = k;
              auto r = policy::check_containment(a, b, bounds);
              py::dict out;
              out["kind"] = kind_name(r.kind);
              out["fast_path"] = r.used_fast_path;
              if (r.witness)
                  out["witness"] = policy::encode_router_setup(*r.witness);
              return out;
          },
          py::arg("announced"), py::arg("preference"), py::arg("k") = 2);

    m.def("map_sizes", [](size_t n_ifif, size_t n_ifip, size_t n_d, size_t per_entry) {
        registry::PolicyId pid;
        pid.pid = 1;
        std::vector<control::PolicyIndex> idx;
        for (size_t i = 0; i < per_entry; ++i)
            idx.push_back(static_cast<uint16_t>(i + 1));
        control::PolicyMaps ifif, ifip, d;
        for (size_t e = 0; e < n_ifif; ++e)
            ifif.imap[control::IfIpPair::if_if(uint16_t(e + 1), uint16_t(e + 2))] = idx;
        for (size_t e = 0; e < n_ifip; ++e)
            ifip.imap[control::IfIpPair::if_ip(
                uint16_t(e + 1), control::IpRange{{}, uint8_t(24)})] = idx;
        for (size_t e = 0; e < n_d; ++e) d.dmap[uint16_t(e + 1)] = pid;
        return py::make_tuple(encode_imap(ifif).size(), encode_imap(ifip).size(),
                              encode_dmap(d, drkey::AsId{1, 1}).size(),
                              control::kDetachedMarkerSize);
    });

    m.def("load_topology_text", &sim::load_topology_text);
    py::class_<sim::Topology>(m, "Topology");
    m.def("run_rtt",
          [](const sim::Topology& topo, const std::vector<std::string>& path,
             uint16_t index, int count) {
              sim::RttScenario sc;
              sc.path = path;
              sc.index = index;
              sc.count = count;
              auto res = sim::run_rtt_experiment(topo, sc);
              std::vector<std::tuple<int, uint16_t, double>> out;
              for (const auto& s : res.samples)
                  out.emplace_back(s.seq, s.index, s.rtt_ms);
              return out;
          });
}
