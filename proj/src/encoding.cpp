#include "avledger/encoding.hpp"

#include <limits>

namespace avl {

std::string_view to_string(Role r) {
    switch (r) {
        case Role::AV: return "AV";
        case Role::W: return "W";
        case Role::AM: return "AM";
        case Role::ST: return "ST";
        case Role::IC: return "IC";
        case Role::GTA: return "GTA";
        case Role::LA: return "LA";
    }
    return "?";
}

std::string_view to_string(PartitionId p) { return p == PartitionId::P1 ? "P1" : "P2"; }

std::string_view to_string(TxKind k) {
    switch (k) {
        case TxKind::EST: return "EST";
        case TxKind::PET: return "PET";
        case TxKind::UT: return "UT";
        case TxKind::ET: return "ET";
        case TxKind::MT: return "MT";
        case TxKind::RET: return "RET";
    }
    return "?";
}

std::optional<Role> parse_role(std::string_view s) {
    for (Role r : kAllRoles)
        if (to_string(r) == s) return r;
    return std::nullopt;
}

std::optional<PartitionId> parse_partition(std::string_view s) {
    for (PartitionId p : kAllPartitions)
        if (to_string(p) == s) return p;
    return std::nullopt;
}

std::optional<TxKind> parse_kind(std::string_view s) {
    for (TxKind k : kAllKinds)
        if (to_string(k) == s) return k;
    return std::nullopt;
}

std::string_view to_string(ErrorCode c) {
    switch (c) {
        case ErrorCode::InvalidArgument: return "InvalidArgument";
        case ErrorCode::InvalidValidity: return "InvalidValidity";
        case ErrorCode::UnknownEntity: return "UnknownEntity";
        case ErrorCode::EscrowDenied: return "EscrowDenied";
        case ErrorCode::UnknownCertificate: return "UnknownCertificate";
        case ErrorCode::MalformedBody: return "MalformedBody";
        case ErrorCode::MissingCertificate: return "MissingCertificate";
        case ErrorCode::NotMultiSig: return "NotMultiSig";
        case ErrorCode::DuplicateSigner: return "DuplicateSigner";
        case ErrorCode::InvalidGenesis: return "InvalidGenesis";
        case ErrorCode::UniquenessViolation: return "UniquenessViolation";
        case ErrorCode::ReplicaMismatch: return "ReplicaMismatch";
        case ErrorCode::Unattributable: return "Unattributable";
        case ErrorCode::PreconditionFailed: return "PreconditionFailed";
        case ErrorCode::ClockViolation: return "ClockViolation";
        case ErrorCode::NotCommitted: return "NotCommitted";
        case ErrorCode::NotFound: return "NotFound";
        case ErrorCode::ConfigError: return "ConfigError";
        case ErrorCode::MalformedCase: return "MalformedCase";
        case ErrorCode::DecodeError: return "DecodeError";
        case ErrorCode::IoError: return "IoError";
    }
    return "?";
}

namespace enc {

void Writer::bytes(std::span<const std::uint8_t> b) {
    if (b.size() > std::numeric_limits<std::uint32_t>::max())
        throw Error(ErrorCode::InvalidArgument, "byte string too long to encode");
    u32(static_cast<std::uint32_t>(b.size()));
    raw(b);
}

void Writer::text(std::string_view s) {
    bytes(std::span(reinterpret_cast<const std::uint8_t*>(s.data()), s.size()));
}

std::uint8_t Reader::u8() {
    need(1);
    return in_[pos_++];
}

bool Reader::boolean() {
    std::uint8_t v = u8();
    if (v > 1) fail("boolean out of range");
    return v == 1;
}

Bytes Reader::bytes() {
    std::uint32_t n = u32();
    auto s = raw(n);
    return Bytes(s.begin(), s.end());
}

std::string Reader::text() {
    std::uint32_t n = u32();
    auto s = raw(n);
    return std::string(reinterpret_cast<const char*>(s.data()), s.size());
}

std::span<const std::uint8_t> Reader::raw(std::size_t n) {
    need(n);
    auto s = in_.subspan(pos_, n);
    pos_ += n;
    return s;
}

std::uint32_t Reader::count(std::size_t min_element_size) {
    std::uint32_t n = u32();
    // Reject counts that cannot possibly fit in the remaining input.
    if (min_element_size > 0 && static_cast<std::uint64_t>(n) * min_element_size > remaining())
        fail("list count exceeds remaining input");
    return n;
}

void Reader::expect_end() const {
    if (!at_end()) fail("trailing bytes after value");
}

void Reader::fail(const std::string& what) const {
    throw Error(ErrorCode::DecodeError, what + " at offset " + std::to_string(pos_));
}

void Reader::need(std::size_t n) const {
    if (in_.size() - pos_ < n) fail("truncated input");
}

std::uint64_t Reader::be(int width) {
    need(static_cast<std::size_t>(width));
    std::uint64_t v = 0;
    for (int i = 0; i < width; ++i) v = (v << 8) | in_[pos_++];
    return v;
}

}  // namespace enc
}  // namespace avl
