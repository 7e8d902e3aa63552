#ifndef AVLEDGER_CRYPTO_HPP
#define AVLEDGER_CRYPTO_HPP

#include "avledger/types.hpp"

#include <array>
#include <cstdint>
#include <span>

// Thin signing/hashing/encryption interface. Ed25519 (libsodium) backs the
// signature scheme; callers only see fixed-size byte arrays.
namespace avl::crypto {

using PublicKey = std::array<std::uint8_t, 32>;
using SecretKey = std::array<std::uint8_t, 64>;
using Signature = std::array<std::uint8_t, 64>;
using Seed = std::array<std::uint8_t, 32>;

Hash256 sha256(std::span<const std::uint8_t> data);
Hash256 sha256(std::span<const std::uint8_t> a, std::span<const std::uint8_t> b);

void keypair_from_seed(const Seed& seed, PublicKey& pk, SecretKey& sk);
Signature sign(const SecretKey& sk, std::span<const std::uint8_t> message);
bool verify(const PublicKey& pk, std::span<const std::uint8_t> message, const Signature& sig);

// X25519 keys for sealing witness testimonies to the decision partition.
struct BoxKeyPair {
    PublicKey public_key{};
    std::array<std::uint8_t, 32> secret_key{};

    static BoxKeyPair from_seed(const Seed& seed);
};

// Anonymous sealed box with a caller-supplied ephemeral seed, so output is
// reproducible under a seeded simulation. Layout: epk(32) || box(msg).
Bytes seal(const PublicKey& recipient, std::span<const std::uint8_t> message,
           const Seed& ephemeral_seed);
std::optional<Bytes> open(const BoxKeyPair& recipient, std::span<const std::uint8_t> sealed);

}  // namespace avl::crypto

#endif
