#include "bundler/distance.hpp"

#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstring>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>

#include "bundler/error.hpp"

namespace bundler {

namespace {

constexpr char kMagic[4] = {'B', 'P', 'X', 'M'};
constexpr std::uint32_t kMatrixFormatVersion = 1;

static_assert(std::endian::native == std::endian::little,
              "matrix dumps assume a little-endian host");

template <typename T>
void put(std::ostream& out, T value) {
  out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
T get(std::istream& in) {
  T value{};
  if (!in.read(reinterpret_cast<char*>(&value), sizeof(T))) {
    throw Error(ErrorCode::kMalformedRecord, "truncated matrix dump");
  }
  return value;
}

std::string format_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

double parse_double(std::string_view s) {
  double v = 0.0;
  auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
    throw Error(ErrorCode::kMalformedRecord, "bad number in matrix text: " + std::string(s));
  }
  return v;
}

ProximityKind kind_from_string(const std::string& s) {
  if (s == "coauth") return ProximityKind::kCoauth;
  if (s == "content") return ProximityKind::kContent;
  if (s == "combined") return ProximityKind::kCombined;
  throw Error(ErrorCode::kMalformedRecord, "unknown matrix kind " + s);
}

std::size_t condensed_size(std::size_t n) { return n < 2 ? 0 : n * (n - 1) / 2; }

}  // namespace

FrequencyProfile frequency_profile(const std::vector<std::string>& tokens, const Vocabulary& vocab) {
  std::map<int, std::int64_t> counts;
  for (const auto& token : tokens) {
    const int id = vocab.id_of(token);
    if (id != Vocabulary::kNotFound) ++counts[id];
  }
  if (counts.empty()) throw Error(ErrorCode::kEmptyText, "no in-vocabulary tokens");
  FrequencyProfile profile;
  profile.freqs.assign(counts.begin(), counts.end());
  for (const auto& [id, f] : profile.freqs) profile.total += f;
  return profile;
}

double intertextual_distance(const FrequencyProfile& a, const FrequencyProfile& b) {
  if (a.total <= 0 || b.total <= 0) {
    throw Error(ErrorCode::kEmptyText, "inter-textual distance of an empty text");
  }
  // The shorter text is the reference; on equal lengths the scale is 1 and
  // the result is the same either way.
  const FrequencyProfile& ref = a.total <= b.total ? a : b;
  const FrequencyProfile& other = a.total <= b.total ? b : a;
  const double scale = static_cast<double>(ref.total) / static_cast<double>(other.total);

  double numerator = 0.0;
  double expected_total = 0.0;
  auto ia = ref.freqs.begin();
  auto ib = other.freqs.begin();
  while (ia != ref.freqs.end() || ib != other.freqs.end()) {
    const bool take_a = ib == other.freqs.end() ||
                        (ia != ref.freqs.end() && ia->first <= ib->first);
    const bool take_b = ia == ref.freqs.end() ||
                        (ib != other.freqs.end() && ib->first <= ia->first);
    const double f = take_a ? static_cast<double>(ia->second) : 0.0;
    double e = take_b ? static_cast<double>(ib->second) * scale : 0.0;
    if (e < 1.0) e = 0.0;
    expected_total += e;
    numerator += std::abs(f - e);
    if (take_a) ++ia;
    if (take_b) ++ib;
  }
  return numerator / (static_cast<double>(ref.total) + expected_total);
}

double coauth_dissimilarity(const AuthorSet& a, const AuthorSet& b) {
  if (a.empty() && b.empty()) return 1.0;
  std::size_t common = 0;
  auto ia = a.begin();
  auto ib = b.begin();
  while (ia != a.end() && ib != b.end()) {
    if (*ia < *ib) {
      ++ia;
    } else if (*ib < *ia) {
      ++ib;
    } else {
      ++common;
      ++ia;
      ++ib;
    }
  }
  const std::size_t united = a.size() + b.size() - common;
  return 1.0 - static_cast<double>(common) / static_cast<double>(united);
}

std::string to_string(ProximityKind kind) {
  switch (kind) {
    case ProximityKind::kCoauth: return "coauth";
    case ProximityKind::kContent: return "content";
    case ProximityKind::kCombined: return "combined";
  }
  return "unknown";
}

ProximityMatrix::ProximityMatrix(std::vector<std::string> labels, ProximityKind kind, double weight)
    : n_(labels.size()),
      labels_(std::move(labels)),
      kind_(kind),
      weight_(weight),
      values_(condensed_size(n_), 0.0) {}

std::size_t ProximityMatrix::index(std::size_t i, std::size_t j) const {
  if (i > j) std::swap(i, j);
  return i * n_ - i * (i + 1) / 2 + (j - i - 1);
}

double ProximityMatrix::operator()(std::size_t i, std::size_t j) const {
  if (i >= n_ || j >= n_) {
    throw Error(ErrorCode::kIndexOutOfRange, "matrix index outside " + std::to_string(n_));
  }
  return i == j ? 0.0 : values_[index(i, j)];
}

void ProximityMatrix::set(std::size_t i, std::size_t j, double value) {
  if (i >= n_ || j >= n_) {
    throw Error(ErrorCode::kIndexOutOfRange, "matrix index outside " + std::to_string(n_));
  }
  ensure(i != j, "diagonal of a proximity matrix is fixed at zero");
  values_[index(i, j)] = value;
}

void ProximityMatrix::validate() const {
  ensure(labels_.size() == n_ && values_.size() == condensed_size(n_),
         "proximity matrix shape mismatch");
  for (double v : values_) {
    ensure(std::isfinite(v) && v >= 0.0 && v <= 1.0,
           "proximity entry outside [0, 1]: " + format_double(v));
  }
}

ProximityMatrix coauth_matrix(std::vector<std::string> labels, std::span<const AuthorSet> coauthors) {
  ensure(labels.size() == coauthors.size(), "one author set per label required");
  ProximityMatrix m(std::move(labels), ProximityKind::kCoauth, 1.0);
  for (std::size_t i = 0; i < m.size(); ++i) {
    for (std::size_t j = i + 1; j < m.size(); ++j) {
      m.set(i, j, coauth_dissimilarity(coauthors[i], coauthors[j]));
    }
  }
  return m;
}

ProximityMatrix content_matrix(std::vector<std::string> labels,
                               std::span<const FrequencyProfile> profiles) {
  ensure(labels.size() == profiles.size(), "one profile per label required");
  ProximityMatrix m(std::move(labels), ProximityKind::kContent, 0.0);
  for (std::size_t i = 0; i < m.size(); ++i) {
    for (std::size_t j = i + 1; j < m.size(); ++j) {
      const bool empty = profiles[i].total == 0 || profiles[j].total == 0;
      m.set(i, j, empty ? 1.0 : intertextual_distance(profiles[i], profiles[j]));
    }
  }
  return m;
}

ProximityMatrix blend(const ProximityMatrix& coauth, const ProximityMatrix& content, double weight) {
  if (!(weight >= 0.0 && weight <= 1.0)) {
    throw Error(ErrorCode::kConfig, "blend weight must lie in [0, 1]");
  }
  ensure(coauth.size() == content.size(), "blended matrices differ in size");
  ProximityMatrix m(coauth.labels(), ProximityKind::kCombined, weight);
  for (std::size_t i = 0; i < m.size(); ++i) {
    for (std::size_t j = i + 1; j < m.size(); ++j) {
      const double mixed = weight * coauth(i, j) + (1.0 - weight) * content(i, j);
      m.set(i, j, std::clamp(mixed, 0.0, 1.0));
    }
  }
  m.validate();
  return m;
}

ProximityMatrix build_proximity(const TopicClass& cls, const Corpus& corpus,
                                std::span<const FrequencyProfile> profiles,
                                std::span<const AuthorSet> coauthors, double weight) {
  if (cls.members.size() < 2) {
    throw Error(ErrorCode::kClassTooSmall, "topic class " + std::to_string(cls.topic_id) +
                                               " has fewer than two members");
  }
  ensure(profiles.size() == cls.members.size() && coauthors.size() == cls.members.size(),
         "per-member inputs do not match the class size");
  std::vector<std::string> labels;
  labels.reserve(cls.members.size());
  for (std::size_t idx : cls.members) labels.push_back(corpus.documents.at(idx).id);
  auto ext = coauth_matrix(labels, coauthors);
  auto cont = content_matrix(labels, profiles);
  return blend(ext, cont, weight);
}

void write_matrix_binary(const ProximityMatrix& m, std::ostream& out) {
  out.write(kMagic, sizeof(kMagic));
  put<std::uint32_t>(out, kMatrixFormatVersion);
  put<std::uint64_t>(out, m.size());
  put<std::uint8_t>(out, static_cast<std::uint8_t>(m.kind()));
  put<double>(out, m.weight());
  for (const auto& label : m.labels()) {
    put<std::uint32_t>(out, static_cast<std::uint32_t>(label.size()));
    out.write(label.data(), static_cast<std::streamsize>(label.size()));
  }
  for (double v : m.condensed()) put<double>(out, v);
  if (!out) throw Error(ErrorCode::kIo, "matrix write failed");
}

ProximityMatrix read_matrix_binary(std::istream& in) {
  char magic[4];
  if (!in.read(magic, sizeof(magic)) || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
    throw Error(ErrorCode::kMalformedRecord, "not a proximity matrix dump");
  }
  if (get<std::uint32_t>(in) != kMatrixFormatVersion) {
    throw Error(ErrorCode::kMalformedRecord, "unsupported matrix dump version");
  }
  const auto n = get<std::uint64_t>(in);
  const auto kind = get<std::uint8_t>(in);
  if (kind > static_cast<std::uint8_t>(ProximityKind::kCombined)) {
    throw Error(ErrorCode::kMalformedRecord, "unknown matrix kind");
  }
  const auto weight = get<double>(in);
  std::vector<std::string> labels(n);
  for (auto& label : labels) {
    label.resize(get<std::uint32_t>(in));
    if (!in.read(label.data(), static_cast<std::streamsize>(label.size()))) {
      throw Error(ErrorCode::kMalformedRecord, "truncated matrix label");
    }
  }
  ProximityMatrix m(std::move(labels), static_cast<ProximityKind>(kind), weight);
  for (std::size_t i = 0; i < m.size(); ++i) {
    for (std::size_t j = i + 1; j < m.size(); ++j) m.set(i, j, get<double>(in));
  }
  return m;
}

void write_matrix_text(const ProximityMatrix& m, std::ostream& out) {
  out << "n " << m.size() << '\n';
  out << "kind " << to_string(m.kind()) << '\n';
  out << "weight " << format_double(m.weight()) << '\n';
  for (const auto& label : m.labels()) out << "label " << label << '\n';
  for (std::size_t i = 0; i + 1 < m.size(); ++i) {
    for (std::size_t j = i + 1; j < m.size(); ++j) {
      out << (j == i + 1 ? "" : " ") << format_double(m(i, j));
    }
    out << '\n';
  }
}

ProximityMatrix read_matrix_text(std::istream& in) {
  auto field = [&](const std::string& key) {
    std::string line;
    if (!std::getline(in, line) || line.rfind(key + " ", 0) != 0) {
      throw Error(ErrorCode::kMalformedRecord, "expected \"" + key + "\" line in matrix text");
    }
    return line.substr(key.size() + 1);
  };
  const std::size_t n = std::stoull(field("n"));
  const ProximityKind kind = kind_from_string(field("kind"));
  const double weight = parse_double(field("weight"));
  std::vector<std::string> labels;
  for (std::size_t i = 0; i < n; ++i) labels.push_back(field("label"));
  ProximityMatrix m(std::move(labels), kind, weight);
  for (std::size_t i = 0; i + 1 < n; ++i) {
    std::string line;
    if (!std::getline(in, line)) throw Error(ErrorCode::kMalformedRecord, "truncated matrix text");
    std::istringstream row(line);
    for (std::size_t j = i + 1; j < n; ++j) {
      std::string token;
      if (!(row >> token)) throw Error(ErrorCode::kMalformedRecord, "short matrix row");
      m.set(i, j, parse_double(token));
    }
  }
  return m;
}

}  // namespace bundler
