#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "balasso/chain.hpp"
#include "balasso/keyvalue.hpp"

namespace balasso {

inline constexpr int kChainFormatVersion = 1;
std::string software_version();

// Provenance written next to every saved chain as meta.txt.
struct RunManifest {
  int format_version = kChainFormatVersion;
  std::string software_version;
  std::string created;  // UTC, ISO 8601
  std::uint64_t seed = 0;
  std::uint64_t stream = 0;
  std::uint64_t config_hash = 0;
  std::string dataset_fingerprint;
  std::string model;
  KeyValues config;  // the chain's provenance settings, hashed into config_hash
};

// Directory layout: chain.csv, meta.txt, checksums.txt (crc32 per file).
RunManifest save_chain(const ChainStore& store, const std::filesystem::path& directory);
ChainStore load_chain(const std::filesystem::path& directory);
RunManifest read_manifest(const std::filesystem::path& directory);

// Columnar text: draw, beta_1..p, sigma2, tau2_1..J, lambda2_1..J; shortest
// round-trip decimals.
std::string chain_csv(const ChainStore& store);
void write_chain_csv(const ChainStore& store, const std::filesystem::path& file);

std::uint32_t crc32_of(std::string_view bytes);

// Writes `contents` to `file`, creating parent directories; IoError names the path.
void write_text_file(const std::filesystem::path& file, const std::string& contents);
std::string read_text_file(const std::filesystem::path& file);

std::string utc_timestamp();

}  // namespace balasso
