#include "avledger/crypto.hpp"

#include <sodium.h>

#include <cstring>
#include <mutex>

namespace avl {

namespace {

constexpr char kHexDigits[] = "0123456789abcdef";

int hex_value(char c) {
    if (c >= '0' && c <= '9') return c - '0';
    if (c >= 'a' && c <= 'f') return c - 'a' + 10;
    if (c >= 'A' && c <= 'F') return c - 'A' + 10;
    return -1;
}

}  // namespace

std::string to_hex(const std::uint8_t* data, std::size_t n) {
    std::string out;
    out.reserve(n * 2);
    for (std::size_t i = 0; i < n; ++i) {
        out.push_back(kHexDigits[data[i] >> 4]);
        out.push_back(kHexDigits[data[i] & 0x0f]);
    }
    return out;
}

Bytes from_hex(std::string_view text) {
    if (text.size() % 2 != 0) throw Error(ErrorCode::InvalidArgument, "odd-length hex string");
    Bytes out(text.size() / 2);
    for (std::size_t i = 0; i < out.size(); ++i) {
        int hi = hex_value(text[2 * i]);
        int lo = hex_value(text[2 * i + 1]);
        if (hi < 0 || lo < 0) throw Error(ErrorCode::InvalidArgument, "invalid hex digit");
        out[i] = static_cast<std::uint8_t>((hi << 4) | lo);
    }
    return out;
}

std::string Hash256::hex() const { return to_hex(bytes); }

Hash256 Hash256::from_hex(std::string_view text) {
    Bytes raw = avl::from_hex(text);
    if (raw.size() != 32) throw Error(ErrorCode::InvalidArgument, "hash must be 32 bytes");
    Hash256 h;
    std::memcpy(h.bytes.data(), raw.data(), 32);
    return h;
}

bool Hash256::is_zero() const {
    for (auto b : bytes)
        if (b != 0) return false;
    return true;
}

namespace crypto {

namespace {

void ensure_init() {
    static std::once_flag once;
    std::call_once(once, [] {
        if (sodium_init() < 0) throw std::runtime_error("libsodium initialisation failed");
    });
}

}  // namespace

Hash256 sha256(std::span<const std::uint8_t> data) {
    ensure_init();
    Hash256 h;
    crypto_hash_sha256(h.bytes.data(), data.data(), data.size());
    return h;
}

Hash256 sha256(std::span<const std::uint8_t> a, std::span<const std::uint8_t> b) {
    ensure_init();
    crypto_hash_sha256_state st;
    crypto_hash_sha256_init(&st);
    crypto_hash_sha256_update(&st, a.data(), a.size());
    crypto_hash_sha256_update(&st, b.data(), b.size());
    Hash256 h;
    crypto_hash_sha256_final(&st, h.bytes.data());
    return h;
}

void keypair_from_seed(const Seed& seed, PublicKey& pk, SecretKey& sk) {
    ensure_init();
    crypto_sign_ed25519_seed_keypair(pk.data(), sk.data(), seed.data());
}

Signature sign(const SecretKey& sk, std::span<const std::uint8_t> message) {
    ensure_init();
    Signature sig{};
    crypto_sign_ed25519_detached(sig.data(), nullptr, message.data(), message.size(), sk.data());
    return sig;
}

bool verify(const PublicKey& pk, std::span<const std::uint8_t> message, const Signature& sig) {
    ensure_init();
    return crypto_sign_ed25519_verify_detached(sig.data(), message.data(), message.size(),
                                               pk.data()) == 0;
}

BoxKeyPair BoxKeyPair::from_seed(const Seed& seed) {
    ensure_init();
    BoxKeyPair kp;
    crypto_box_seed_keypair(kp.public_key.data(), kp.secret_key.data(), seed.data());
    return kp;
}

namespace {

// Same nonce derivation as crypto_box_seal: first 24 bytes of BLAKE2b(epk || pk).
std::array<std::uint8_t, crypto_box_NONCEBYTES> seal_nonce(const std::uint8_t* epk,
                                                           const std::uint8_t* pk) {
    std::array<std::uint8_t, crypto_box_NONCEBYTES> nonce{};
    crypto_generichash_state st;
    crypto_generichash_init(&st, nullptr, 0, nonce.size());
    crypto_generichash_update(&st, epk, crypto_box_PUBLICKEYBYTES);
    crypto_generichash_update(&st, pk, crypto_box_PUBLICKEYBYTES);
    crypto_generichash_final(&st, nonce.data(), nonce.size());
    return nonce;
}

}  // namespace

Bytes seal(const PublicKey& recipient, std::span<const std::uint8_t> message,
           const Seed& ephemeral_seed) {
    ensure_init();
    BoxKeyPair eph = BoxKeyPair::from_seed(ephemeral_seed);
    auto nonce = seal_nonce(eph.public_key.data(), recipient.data());
    Bytes out(crypto_box_PUBLICKEYBYTES + crypto_box_MACBYTES + message.size());
    std::memcpy(out.data(), eph.public_key.data(), crypto_box_PUBLICKEYBYTES);
    if (crypto_box_easy(out.data() + crypto_box_PUBLICKEYBYTES, message.data(), message.size(),
                        nonce.data(), recipient.data(), eph.secret_key.data()) != 0)
        throw std::runtime_error("crypto_box_easy failed");
    sodium_memzero(eph.secret_key.data(), eph.secret_key.size());
    return out;
}

std::optional<Bytes> open(const BoxKeyPair& recipient, std::span<const std::uint8_t> sealed) {
    ensure_init();
    if (sealed.size() < crypto_box_PUBLICKEYBYTES + crypto_box_MACBYTES) return std::nullopt;
    const std::uint8_t* epk = sealed.data();
    auto nonce = seal_nonce(epk, recipient.public_key.data());
    Bytes out(sealed.size() - crypto_box_PUBLICKEYBYTES - crypto_box_MACBYTES);
    if (crypto_box_open_easy(out.data(), sealed.data() + crypto_box_PUBLICKEYBYTES,
                             sealed.size() - crypto_box_PUBLICKEYBYTES, nonce.data(), epk,
                             recipient.secret_key.data()) != 0)
        return std::nullopt;
    return out;
}

}  // namespace crypto
}  // namespace avl
