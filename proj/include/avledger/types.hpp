#ifndef AVLEDGER_TYPES_HPP
#define AVLEDGER_TYPES_HPP

#include <array>
#include <compare>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace avl {

using Bytes = std::vector<std::uint8_t>;

// Virtual seconds. The simulator never reads a wall clock.
using Timestamp = std::int64_t;
using Duration = std::int64_t;

struct Hash256 {
    std::array<std::uint8_t, 32> bytes{};

    static constexpr std::size_t size() { return 32; }
    std::string hex() const;
    static Hash256 from_hex(std::string_view text);
    bool is_zero() const;

    auto operator<=>(const Hash256&) const = default;
};

struct EntityId {
    std::string value;

    EntityId() = default;
    EntityId(std::string v) : value(std::move(v)) {}
    EntityId(const char* v) : value(v) {}

    bool empty() const { return value.empty(); }
    const std::string& str() const { return value; }

    auto operator<=>(const EntityId&) const = default;
};

// Seven liability-model roles. W is a vehicle acting as a collision witness.
enum class Role : std::uint8_t { AV = 0, W = 1, AM = 2, ST = 3, IC = 4, GTA = 5, LA = 6 };
inline constexpr std::array<Role, 7> kAllRoles{Role::AV, Role::W,  Role::AM, Role::ST,
                                               Role::IC, Role::GTA, Role::LA};

enum class PartitionId : std::uint8_t { P1 = 1, P2 = 2 };
inline constexpr std::array<PartitionId, 2> kAllPartitions{PartitionId::P1, PartitionId::P2};

enum class TxKind : std::uint8_t { EST = 0, PET = 1, UT = 2, ET = 3, MT = 4, RET = 5 };
inline constexpr std::array<TxKind, 6> kAllKinds{TxKind::EST, TxKind::PET, TxKind::UT,
                                                 TxKind::ET,  TxKind::MT,  TxKind::RET};

// Vehicle roles sign with a pseudonym certificate; all others with a key
// registered in the partition's genesis membership.
constexpr bool is_vehicle_role(Role r) { return r == Role::AV || r == Role::W; }

std::string_view to_string(Role r);
std::string_view to_string(PartitionId p);
std::string_view to_string(TxKind k);
std::optional<Role> parse_role(std::string_view s);
std::optional<PartitionId> parse_partition(std::string_view s);
std::optional<TxKind> parse_kind(std::string_view s);

enum class ErrorCode {
    InvalidArgument,
    InvalidValidity,
    UnknownEntity,
    EscrowDenied,
    UnknownCertificate,
    MalformedBody,
    MissingCertificate,
    NotMultiSig,
    DuplicateSigner,
    InvalidGenesis,
    UniquenessViolation,
    ReplicaMismatch,
    Unattributable,
    PreconditionFailed,
    ClockViolation,
    NotCommitted,
    NotFound,
    ConfigError,
    MalformedCase,
    DecodeError,
    IoError,
};

std::string_view to_string(ErrorCode c);

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& what)
        : std::runtime_error(what), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

std::string to_hex(const std::uint8_t* data, std::size_t n);
template <std::size_t N>
std::string to_hex(const std::array<std::uint8_t, N>& a) { return to_hex(a.data(), N); }
Bytes from_hex(std::string_view text);

}  // namespace avl

#endif
