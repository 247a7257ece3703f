#include "fabrid/registry.hpp"

#include <fstream>

#include "json.hpp"

namespace fabrid::registry {

std::string scope_name(const Scope& scope) {
    return scope ? scope->str() : "global";
}

std::string PolicyId::str() const {
    return scope_name(scope) + "/" + std::to_string(pid);
}

namespace {

nlohmann::json entry_to_json(const RegistryEntry& e) {
    nlohmann::json j;
    j["scope"] = scope_name(e.id.scope);
    j["pid"] = e.id.pid;
    j["description"] = e.description;
    j["registeredAt"] = e.registered_at;
    return j;
}

RegistryEntry entry_from_json(const nlohmann::json& j) {
    RegistryEntry e;
    std::string scope = j.at("scope").get<std::string>();
    if (scope != "global") e.id.scope = drkey::AsId::parse(scope);
    e.id.pid = j.at("pid").get<uint32_t>();
    e.description = j.at("description").get<std::string>();
    e.registered_at = j.at("registeredAt").get<uint64_t>();
    return e;
}

Bytes encode_entry(const RegistryEntry& e) {
    std::string text = entry_to_json(e).dump();
    return Bytes(text.begin(), text.end());
}

}  // namespace

RegistryEntry decode_entry(const Bytes& payload) {
    return entry_from_json(
        nlohmann::json::parse(std::string(payload.begin(), payload.end())));
}

void Registry::add_scope(const Scope& scope, crypto::SigKeyPair key) {
    std::unique_lock lock(mu_);
    keys_[scope_name(scope)] = std::move(key);
}

void Registry::register_policy(const Scope& caller, const PolicyId& id,
                               const std::string& description, uint64_t now) {
    if (caller != id.scope) throw Unauthorized{};
    std::unique_lock lock(mu_);
    if (entries_.count(id)) throw AlreadyExists(id);
    entries_[id] = RegistryEntry{id, description, now};
}

SignedResponse Registry::lookup(const PolicyId& id) const {
    std::shared_lock lock(mu_);
    auto it = entries_.find(id);
    if (it == entries_.end()) throw NotFound(id);
    auto key = keys_.find(scope_name(id.scope));
    if (key == keys_.end())
        throw std::runtime_error("no signing key for scope " + scope_name(id.scope));
    SignedResponse resp;
    resp.payload = encode_entry(it->second);
    resp.signer = scope_name(id.scope);
    resp.signature = crypto::sign(key->second, resp.payload);
    return resp;
}

crypto::PubKey Registry::scope_pubkey(const Scope& scope) const {
    std::shared_lock lock(mu_);
    return keys_.at(scope_name(scope)).pub;
}

void Registry::save(const std::string& path) const {
    std::shared_lock lock(mu_);
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    for (const auto& [id, entry] : entries_) out << entry_to_json(entry).dump() << '\n';
}

void Registry::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot read " + path);
    std::unique_lock lock(mu_);
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        RegistryEntry e = entry_from_json(nlohmann::json::parse(line));
        if (entries_.count(e.id)) throw AlreadyExists(e.id);
        entries_[e.id] = std::move(e);
    }
}

RegistryEntry PolicyResolver::resolve(const PolicyId& id) {
    std::lock_guard lock(mu_);
    if (auto it = cache_.find(id); it != cache_.end()) return it->second;
    SignedResponse resp = remote_->lookup(id);
    ++fetches_;
    auto trusted = trust_.find(resp.signer);
    if (trusted == trust_.end() ||
        !crypto::verify(trusted->second, resp.payload, resp.signature))
        throw SignatureInvalid{};
    RegistryEntry entry = decode_entry(resp.payload);
    cache_[id] = entry;
    return entry;
}

}  // namespace fabrid::registry
