#ifndef FABRID_REGISTRY_HPP
#define FABRID_REGISTRY_HPP

#include <map>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>

#include "fabrid/crypto.hpp"
#include "fabrid/drkey.hpp"

namespace fabrid::registry {

// nullopt scope = the global registry (one trusted authority keypair)
using Scope = std::optional<drkey::AsId>;

struct PolicyId {
    Scope scope;
    uint32_t pid = 0;

    bool is_global() const { return !scope.has_value(); }
    auto operator<=>(const PolicyId&) const = default;
    std::string str() const;
};

struct RegistryEntry {
    PolicyId id;
    std::string description;  // policy text in the concrete grammar
    uint64_t registered_at = 0;

    bool operator==(const RegistryEntry&) const = default;
};

struct SignedResponse {
    Bytes payload;       // serialized RegistryEntry
    std::string signer;  // "global" or the owning AS id
    crypto::Signature signature;
};

RegistryEntry decode_entry(const Bytes& payload);

struct AlreadyExists : std::runtime_error {
    explicit AlreadyExists(const PolicyId& id)
        : std::runtime_error("policy id already registered: " + id.str()) {}
};
struct Unauthorized : std::runtime_error {
    Unauthorized() : std::runtime_error("caller does not own the registry scope") {}
};
struct NotFound : std::runtime_error {
    explicit NotFound(const PolicyId& id)
        : std::runtime_error("no registry entry for " + id.str()) {}
};
struct SignatureInvalid : std::runtime_error {
    SignatureInvalid() : std::runtime_error("registry response signature invalid") {}
};

// Append-only registries, one logical store per scope. Entries are immutable
// and re-registration is rejected even with identical content.
class Registry {
  public:
    void add_scope(const Scope& scope, crypto::SigKeyPair key);

    // pre: caller owns the scope of `id`
    void register_policy(const Scope& caller, const PolicyId& id,
                         const std::string& description, uint64_t now = 0);

    SignedResponse lookup(const PolicyId& id) const;

    crypto::PubKey scope_pubkey(const Scope& scope) const;

    // line-delimited persistence, one entry per line
    void save(const std::string& path) const;
    void load(const std::string& path);

  private:
    mutable std::shared_mutex mu_;
    std::map<std::string, crypto::SigKeyPair> keys_;      // by scope name
    std::map<PolicyId, RegistryEntry> entries_;
};

std::string scope_name(const Scope& scope);

// Control-service side: verifies signatures against a trust store and caches
// entries, with at most one remote fetch per id.
class PolicyResolver {
  public:
    PolicyResolver(const Registry* remote,
                   std::map<std::string, crypto::PubKey> trust)
        : remote_(remote), trust_(std::move(trust)) {}

    RegistryEntry resolve(const PolicyId& id);

    size_t remote_fetches() const { return fetches_; }

  private:
    const Registry* remote_;
    std::map<std::string, crypto::PubKey> trust_;
    std::mutex mu_;
    std::map<PolicyId, RegistryEntry> cache_;
    size_t fetches_ = 0;
};

}  // namespace fabrid::registry

#endif
