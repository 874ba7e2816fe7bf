#pragma once

#include <map>
#include <string>
#include <string_view>

#include "blocksim/digest.hpp"

namespace blocksim {

// Authenticity scheme. The default is a keyed-hash stub: adequate for a
// closed simulation where every party derives every key, and swappable for a
// real asymmetric scheme since signing cost is itself a measured quantity.
class Signer {
 public:
  virtual ~Signer() = default;
  virtual Digest sign(std::string_view signer_id, const Digest& payload) const = 0;
  virtual bool verify(std::string_view signer_id, const Digest& payload,
                      const Digest& signature) const = 0;
};

class KeyedHashSigner final : public Signer {
 public:
  Digest sign(std::string_view signer_id, const Digest& payload) const override {
    std::vector<std::uint8_t> buf;
    const Digest key = derive_key(signer_id);
    buf.insert(buf.end(), key.bytes.begin(), key.bytes.end());
    buf.insert(buf.end(), payload.bytes.begin(), payload.bytes.end());
    return sha256(buf);
  }

  bool verify(std::string_view signer_id, const Digest& payload,
              const Digest& signature) const override {
    return sign(signer_id, payload) == signature;
  }

  static Digest derive_key(std::string_view signer_id) {
    thread_local std::map<std::string, Digest, std::less<>> cache;
    if (auto it = cache.find(signer_id); it != cache.end()) return it->second;
    const Digest key = sha256(std::string("key:") + std::string(signer_id));
    cache.emplace(std::string(signer_id), key);
    return key;
  }
};

inline const Signer& default_signer() {
  static const KeyedHashSigner signer;
  return signer;
}

}  // namespace blocksim
