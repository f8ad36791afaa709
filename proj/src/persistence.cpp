#include "balasso/persistence.hpp"

#include <zlib.h>

#include <chrono>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <sstream>

#include "balasso/error.hpp"

namespace balasso {

std::string software_version() { return "0.1.0"; }

std::uint32_t crc32_of(std::string_view bytes) {
  uLong crc = crc32(0L, Z_NULL, 0);
  // zlib takes uInt lengths; feed large inputs in slices.
  constexpr std::size_t kSlice = 1U << 30;
  for (std::size_t off = 0; off < bytes.size(); off += kSlice) {
    const std::size_t len = std::min(kSlice, bytes.size() - off);
    crc = crc32(crc, reinterpret_cast<const Bytef*>(bytes.data() + off), static_cast<uInt>(len));
  }
  return static_cast<std::uint32_t>(crc);
}

void write_text_file(const std::filesystem::path& file, const std::string& contents) {
  std::error_code ec;
  if (file.has_parent_path()) std::filesystem::create_directories(file.parent_path(), ec);
  if (ec) throw IoError("cannot create directory " + file.parent_path().string() + ": " + ec.message());
  std::ofstream out(file, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + file.string() + " for writing");
  out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
  if (!out) throw IoError("write failed for " + file.string());
}

std::string read_text_file(const std::filesystem::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw IoError("cannot open " + file.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char text[32];
  std::strftime(text, sizeof text, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return text;
}

std::string chain_csv(const ChainStore& store) {
  std::string out = "draw";
  for (Eigen::Index j = 0; j < store.p(); ++j) out += ",beta_" + std::to_string(j + 1);
  out += ",sigma2";
  for (Eigen::Index j = 0; j < store.n_penalties(); ++j) out += ",tau2_" + std::to_string(j + 1);
  for (Eigen::Index j = 0; j < store.n_penalties(); ++j) out += ",lambda2_" + std::to_string(j + 1);
  out += '\n';
  for (Eigen::Index i = 0; i < store.size(); ++i) {
    out += std::to_string(i + 1);
    for (double v : store.beta(i)) (out += ',') += format_double(v);
    (out += ',') += format_double(store.sigma2(i));
    for (double v : store.tau2(i)) (out += ',') += format_double(v);
    for (double v : store.lambda2(i)) (out += ',') += format_double(v);
    out += '\n';
  }
  return out;
}

void write_chain_csv(const ChainStore& store, const std::filesystem::path& file) {
  write_text_file(file, chain_csv(store));
}

namespace {

std::string join_vector(const Eigen::VectorXd& v) {
  std::string s;
  for (Eigen::Index j = 0; j < v.size(); ++j) s += (j ? "," : "") + format_double(v[j]);
  return s;
}

std::vector<std::string> split(const std::string& text, char sep) {
  std::vector<std::string> parts;
  std::string cur;
  std::istringstream in(text);
  while (std::getline(in, cur, sep)) parts.push_back(cur);
  if (!text.empty() && text.back() == sep) parts.emplace_back();
  return parts;
}

std::string format_groups(const GroupMap& groups) {
  std::string s;
  for (std::size_t g = 0; g < groups.size(); ++g) {
    if (g) s += ';';
    for (std::size_t i = 0; i < groups[g].size(); ++i) s += (i ? "," : "") + std::to_string(groups[g][i]);
  }
  return s;
}

GroupMap parse_groups(const std::string& text) {
  GroupMap groups;
  if (text.empty()) return groups;
  for (const auto& part : split(text, ';')) {
    std::vector<Eigen::Index> g;
    for (const auto& idx : split(part, ',')) g.push_back(static_cast<Eigen::Index>(std::stoll(idx)));
    groups.push_back(std::move(g));
  }
  return groups;
}

std::string format_relation(const AncestryRelation& rel) {
  std::string s;
  for (std::size_t i = 0; i < rel.size(); ++i)
    s += (i ? ";" : "") + std::to_string(rel[i].first) + ">" + std::to_string(rel[i].second);
  return s;
}

AncestryRelation parse_relation(const std::string& text) {
  AncestryRelation rel;
  if (text.empty()) return rel;
  for (const auto& part : split(text, ';')) {
    const auto pos = part.find('>');
    if (pos == std::string::npos) throw ManifestError("malformed ancestry entry '" + part + "'");
    rel.emplace_back(std::stoll(part.substr(0, pos)), std::stoll(part.substr(pos + 1)));
  }
  return rel;
}

const std::string& require(const KeyValues& kv, const std::string& key) {
  const std::string* v = find_value(kv, key);
  if (!v) throw ManifestError("manifest lacks required key '" + key + "'");
  return *v;
}

constexpr const char* kConfigPrefix = "config.";

}  // namespace

RunManifest save_chain(const ChainStore& store, const std::filesystem::path& directory) {
  RunManifest m;
  m.software_version = software_version();
  m.created = utc_timestamp();
  m.seed = store.provenance.seed;
  m.stream = store.provenance.stream;
  m.config = store.provenance.config;
  m.config_hash = store.provenance.config_hash();
  m.model = store.model;
  const std::string* fp = find_value(m.config, "data.fingerprint");
  m.dataset_fingerprint = fp ? *fp : "unknown";

  KeyValues meta{{"format_version", std::to_string(m.format_version)},
                 {"software_version", m.software_version},
                 {"created", m.created},
                 {"seed", std::to_string(m.seed)},
                 {"stream", std::to_string(m.stream)},
                 {"config_hash", to_hex(m.config_hash)},
                 {"dataset_fingerprint", m.dataset_fingerprint},
                 {"model", m.model},
                 {"p", std::to_string(store.p())},
                 {"n_penalties", std::to_string(store.n_penalties())},
                 {"draws", std::to_string(store.size())},
                 {"delta", format_double(store.delta)},
                 {"eb_lambda", store.eb_lambda ? join_vector(*store.eb_lambda) : "none"},
                 {"groups", format_groups(store.groups)},
                 {"ancestry", format_relation(store.ancestry)}};
  for (const auto& [k, v] : m.config) meta.emplace_back(kConfigPrefix + k, v);

  const std::string chain_text = chain_csv(store);
  const std::string meta_text = format_key_values(meta);
  write_text_file(directory / "chain.csv", chain_text);
  write_text_file(directory / "meta.txt", meta_text);
  char line[64];
  std::string sums;
  std::snprintf(line, sizeof line, "%08x  chain.csv\n", crc32_of(chain_text));
  sums += line;
  std::snprintf(line, sizeof line, "%08x  meta.txt\n", crc32_of(meta_text));
  sums += line;
  write_text_file(directory / "checksums.txt", sums);
  return m;
}

namespace {

void verify_checksums(const std::filesystem::path& directory) {
  const auto sums_path = directory / "checksums.txt";
  if (!std::filesystem::exists(sums_path)) throw ChecksumError("missing checksum file " + sums_path.string());
  std::istringstream in(read_text_file(sums_path));
  std::string line;
  int checked = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto pos = line.find("  ");
    if (pos == std::string::npos) throw ChecksumError("malformed line in " + sums_path.string() + ": " + line);
    const std::string expected = line.substr(0, pos);
    const std::string name = line.substr(pos + 2);
    const auto file = directory / name;
    if (!std::filesystem::exists(file)) throw IoError("missing file " + file.string());
    char actual[16];
    std::snprintf(actual, sizeof actual, "%08x", crc32_of(read_text_file(file)));
    if (expected != actual)
      throw ChecksumError("checksum mismatch for " + file.string() + ": recorded " + expected + ", computed " + actual);
    ++checked;
  }
  if (checked == 0) throw ChecksumError("empty checksum file " + sums_path.string());
}

}  // namespace

RunManifest read_manifest(const std::filesystem::path& directory) {
  const auto meta_path = directory / "meta.txt";
  if (!std::filesystem::exists(meta_path)) throw ManifestError("missing manifest " + meta_path.string());
  const KeyValues meta = parse_key_values(read_text_file(meta_path));
  RunManifest m;
  m.format_version = std::stoi(require(meta, "format_version"));
  if (m.format_version != kChainFormatVersion)
    throw ManifestError("unsupported chain format version " + std::to_string(m.format_version));
  m.software_version = require(meta, "software_version");
  m.created = require(meta, "created");
  m.seed = std::stoull(require(meta, "seed"));
  m.stream = std::stoull(require(meta, "stream"));
  m.config_hash = from_hex(require(meta, "config_hash"));
  m.dataset_fingerprint = require(meta, "dataset_fingerprint");
  m.model = require(meta, "model");
  const std::string prefix = kConfigPrefix;
  for (const auto& [k, v] : meta)
    if (k.rfind(prefix, 0) == 0) m.config.emplace_back(k.substr(prefix.size()), v);
  return m;
}

ChainStore load_chain(const std::filesystem::path& directory) {
  if (!std::filesystem::exists(directory / "meta.txt"))
    throw ManifestError("missing manifest " + (directory / "meta.txt").string());
  verify_checksums(directory);
  const RunManifest m = read_manifest(directory);
  const KeyValues meta = parse_key_values(read_text_file(directory / "meta.txt"));

  ChainProvenance prov;
  prov.seed = m.seed;
  prov.stream = m.stream;
  prov.config = m.config;
  if (prov.config_hash() != m.config_hash)
    throw ManifestError("config hash mismatch in " + directory.string() + ": recorded " + to_hex(m.config_hash) +
                        ", recomputed " + to_hex(prov.config_hash()));

  const Eigen::Index p = std::stoll(require(meta, "p"));
  const Eigen::Index J = std::stoll(require(meta, "n_penalties"));
  const Eigen::Index draws = std::stoll(require(meta, "draws"));
  ChainStore store(p, J);
  store.provenance = prov;
  store.model = m.model;
  store.delta = parse_double(require(meta, "delta"));
  const std::string& eb = require(meta, "eb_lambda");
  if (eb != "none") {
    const auto parts = split(eb, ',');
    Eigen::VectorXd v(static_cast<Eigen::Index>(parts.size()));
    for (std::size_t i = 0; i < parts.size(); ++i) v[static_cast<Eigen::Index>(i)] = parse_double(parts[i]);
    store.eb_lambda = v;
  }
  store.groups = parse_groups(require(meta, "groups"));
  store.ancestry = parse_relation(require(meta, "ancestry"));

  std::istringstream in(read_text_file(directory / "chain.csv"));
  std::string line;
  if (!std::getline(in, line)) throw ParseError("chain.csv is empty", 0, 0);
  const std::size_t columns = static_cast<std::size_t>(1 + p + 1 + 2 * J);
  if (split(line, ',').size() != columns)
    throw ParseError("chain.csv header has the wrong number of columns for p=" + std::to_string(p), 0, 0);
  store.reserve(draws);
  Eigen::VectorXd beta(p), tau2(J), lambda2(J);
  std::size_t row = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    ++row;
    const auto fields = split(line, ',');
    if (fields.size() != columns)
      throw ParseError("chain.csv row " + std::to_string(row) + " has " + std::to_string(fields.size()) + " fields",
                       row, 0);
    std::size_t c = 1;
    auto next = [&]() {
      try {
        return parse_double(fields[c++]);
      } catch (const std::invalid_argument&) {
        throw ParseError("chain.csv: bad number at row " + std::to_string(row) + ", column " + std::to_string(c), row,
                         c);
      }
    };
    for (Eigen::Index j = 0; j < p; ++j) beta[j] = next();
    const double sigma2 = next();
    for (Eigen::Index j = 0; j < J; ++j) tau2[j] = next();
    for (Eigen::Index j = 0; j < J; ++j) lambda2[j] = next();
    store.append(beta, sigma2, tau2, lambda2);
  }
  if (store.size() != draws)
    throw ManifestError("manifest records " + std::to_string(draws) + " draws, chain.csv holds " +
                        std::to_string(store.size()));
  return store;
}

}  // namespace balasso
