#include "pgo/digest.hpp"

#include <openssl/evp.h>

#include <array>
#include <memory>

#include "pgo/error.hpp"

namespace pgo {

const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::MalformedRecord: return "MalformedRecord";
    case ErrorKind::EmptyInput: return "EmptyInput";
    case ErrorKind::NoColdStartData: return "NoColdStartData";
    case ErrorKind::UnknownFormat: return "UnknownFormat";
    case ErrorKind::ParseError: return "ParseError";
    case ErrorKind::StaleSource: return "StaleSource";
    case ErrorKind::VerificationFailure: return "VerificationFailure";
    case ErrorKind::EmptyStream: return "EmptyStream";
    case ErrorKind::Config: return "ConfigError";
    case ErrorKind::Io: return "IoError";
  }
  return "Error";
}

std::string sha256_hex(std::string_view bytes) {
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), EVP_MD_CTX_free);
  std::array<unsigned char, EVP_MAX_MD_SIZE> md{};
  unsigned int len = 0;
  if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1 ||
      EVP_DigestUpdate(ctx.get(), bytes.data(), bytes.size()) != 1 ||
      EVP_DigestFinal_ex(ctx.get(), md.data(), &len) != 1) {
    throw Error(ErrorKind::Io, "sha256 failed");
  }
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  out.reserve(len * 2);
  for (unsigned int i = 0; i < len; ++i) {
    out.push_back(kHex[md[i] >> 4]);
    out.push_back(kHex[md[i] & 0xf]);
  }
  return out;
}

}  // namespace pgo
