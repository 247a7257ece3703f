#include <algorithm>

#include "fabrid/control.hpp"

namespace fabrid::control {

namespace {

// the per-entry fields covered by the hop signature (extension excluded;
// the digest binds it)
Bytes signed_part(const AsEntry& e) {
    Bytes out;
    auto as = e.as_id.encode();
    out.insert(out.end(), as.begin(), as.end());
    put_u16(out, e.ingress_if);
    put_u16(out, e.egress_if);
    put_u64(out, e.validity.not_before);
    put_u64(out, e.validity.not_after);
    out.insert(out.end(), e.maps_digest.bytes.begin(), e.maps_digest.bytes.end());
    return out;
}

// message signed by hop i: all preceding signed parts and signatures, then
// hop i's own signed part
Bytes signing_input(const Pcb& pcb, size_t hop) {
    Bytes msg;
    for (size_t j = 0; j < hop; ++j) {
        Bytes part = signed_part(pcb.entries[j]);
        msg.insert(msg.end(), part.begin(), part.end());
        msg.insert(msg.end(), pcb.entries[j].signature.begin(),
                   pcb.entries[j].signature.end());
    }
    Bytes part = signed_part(pcb.entries[hop]);
    msg.insert(msg.end(), part.begin(), part.end());
    return msg;
}

void check_announcements(AsContext& ctx, const ValidityWindow& validity) {
    for (const auto& [pair, indices] : ctx.maps.imap)
        for (PolicyIndex idx : indices)
            if (!ctx.supported_indices.count(idx)) throw UnsupportedAnnouncement(idx);
    for (const auto& [idx, pid] : ctx.maps.dmap) {
        for (const auto& [prev_pid, prev_window] : ctx.issued[idx])
            if (prev_window.overlaps(validity) && prev_pid != pid)
                throw IndexRemapped(idx);
    }
    for (const auto& [idx, pid] : ctx.maps.dmap)
        ctx.issued[idx].push_back({pid, validity});
}

AsEntry make_entry(AsContext& ctx, InterfaceId ingress_if, InterfaceId egress_if,
                   ValidityWindow validity) {
    AsEntry e;
    e.as_id = ctx.as_id;
    e.ingress_if = ingress_if;
    e.egress_if = egress_if;
    e.validity = validity;
    e.extension = encode_maps_framed(ctx.maps, ctx.as_id);
    e.maps_digest = crypto::digest16(*e.extension);
    return e;
}

}  // namespace

Pcb originate_pcb(AsContext& ctx, InterfaceId egress_if, ValidityWindow validity) {
    check_announcements(ctx, validity);
    Pcb pcb;
    pcb.entries.push_back(make_entry(ctx, 0, egress_if, validity));
    pcb.entries.back().signature =
        crypto::sign(ctx.sig_key, signing_input(pcb, 0));
    return pcb;
}

Pcb extend_pcb(const Pcb& pcb, AsContext& ctx, InterfaceId ingress_if,
               InterfaceId egress_if, ValidityWindow validity,
               const TrustStore& trust) {
    for (size_t i = 0; i < pcb.entries.size(); ++i) {
        auto key = trust.find(pcb.entries[i].as_id.str());
        if (key == trust.end() ||
            !crypto::verify(key->second, signing_input(pcb, i),
                            pcb.entries[i].signature))
            throw UpstreamSignatureInvalid{};
    }
    check_announcements(ctx, validity);
    Pcb out = pcb;
    out.entries.push_back(make_entry(ctx, ingress_if, egress_if, validity));
    out.entries.back().signature =
        crypto::sign(ctx.sig_key, signing_input(out, out.entries.size() - 1));
    return out;
}

std::pair<Pcb, std::vector<Bytes>> detach_extension(const Pcb& pcb) {
    Pcb detached = pcb;
    std::vector<Bytes> blobs;
    for (auto& e : detached.entries) {
        blobs.push_back(e.extension.value_or(Bytes{}));
        e.extension.reset();
    }
    return {detached, blobs};
}

Pcb reattach_extension(const Pcb& pcb, const std::vector<Bytes>& blobs) {
    if (blobs.size() != pcb.entries.size())
        throw DigestMismatch{};
    Pcb out = pcb;
    for (size_t i = 0; i < blobs.size(); ++i) {
        if (blobs[i].empty()) continue;
        if (crypto::digest16(blobs[i]) != out.entries[i].maps_digest)
            throw DigestMismatch{};
        out.entries[i].extension = blobs[i];
    }
    return out;
}

PcbVerifyResult verify_pcb(const Pcb& pcb, const TrustStore& trust, uint64_t now) {
    for (size_t i = 0; i < pcb.entries.size(); ++i) {
        const AsEntry& e = pcb.entries[i];
        if (!e.validity.contains(now))
            return {PcbError::Expired, static_cast<int>(i)};
        auto key = trust.find(e.as_id.str());
        if (key == trust.end() ||
            !crypto::verify(key->second, signing_input(pcb, i), e.signature))
            return {PcbError::SignatureInvalid, static_cast<int>(i)};
        if (e.extension && crypto::digest16(*e.extension) != e.maps_digest)
            return {PcbError::DigestMismatch, static_cast<int>(i)};
    }
    return {};
}

Bytes Pcb::serialize() const {
    Bytes out;
    put_u16(out, static_cast<uint16_t>(entries.size()));
    for (const auto& e : entries) {
        Bytes part = signed_part(e);
        out.insert(out.end(), part.begin(), part.end());
        put_u16(out, e.extension ? 1 : 0);  // flags: bit0 = extension attached
        if (e.extension) {
            put_u32(out, static_cast<uint32_t>(e.extension->size()));
            out.insert(out.end(), e.extension->begin(), e.extension->end());
        }
        put_u16(out, static_cast<uint16_t>(e.signature.size()));
        out.insert(out.end(), e.signature.begin(), e.signature.end());
    }
    return out;
}

Pcb Pcb::deserialize(std::span<const uint8_t> data) {
    ByteReader r(data);
    Pcb pcb;
    uint16_t n = r.u16();
    for (uint16_t i = 0; i < n; ++i) {
        AsEntry e;
        e.as_id = drkey::AsId::decode(r.take(8));
        e.ingress_if = r.u16();
        e.egress_if = r.u16();
        e.validity.not_before = r.u64();
        e.validity.not_after = r.u64();
        auto digest = r.take(16);
        std::copy(digest.begin(), digest.end(), e.maps_digest.bytes.begin());
        uint16_t flags = r.u16();
        if (flags & 1) {
            uint32_t len = r.u32();
            auto blob = r.take(len);
            e.extension = Bytes(blob.begin(), blob.end());
        }
        uint16_t siglen = r.u16();
        auto sig = r.take(siglen);
        e.signature.assign(sig.begin(), sig.end());
        pcb.entries.push_back(std::move(e));
    }
    if (!r.done()) throw std::invalid_argument("trailing bytes after PCB");
    return pcb;
}

}  // namespace fabrid::control
