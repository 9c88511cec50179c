#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "rdsel/errors.hpp"
#include "rdsel/matrix.hpp"
#include "rdsel/rng.hpp"

namespace rdsel {

enum class DomainRole { source, intermediate, target };

inline std::string to_string(DomainRole role) {
  switch (role) {
    case DomainRole::source: return "source";
    case DomainRole::intermediate: return "intermediate";
    case DomainRole::target: return "target";
  }
  return "?";
}

inline std::optional<DomainRole> parse_role(const std::string& s) {
  if (s == "source") return DomainRole::source;
  if (s == "intermediate") return DomainRole::intermediate;
  if (s == "target") return DomainRole::target;
  return std::nullopt;
}

// One domain's samples. Training-visible labels exist only on the source;
// non-source labels live in the separate eval channel, which the trainer
// never reads -- it exists so accuracy can be reported afterwards.
struct DomainDataset {
  int domain_id = 0;
  DomainRole role = DomainRole::intermediate;
  Matrix features;                        // n x d
  std::vector<int> labels;                // training labels, source only
  std::vector<int> eval_labels;           // held-out labels, non-source
  std::optional<double> meta;             // continuous index, e.g. angle

  std::size_t size() const { return features.rows; }
  std::size_t dim() const { return features.cols; }
};

// Ordered intermediate-domain ids actually used for transfer.
struct TransferPath {
  std::vector<int> ids;

  std::size_t length() const { return ids.size(); }
};

struct Batch {
  Matrix x;
  std::vector<int> labels;  // empty when the dataset is unlabeled
};

// Uniform sample of `size` rows without replacement.
inline Batch minibatch(const DomainDataset& ds, std::size_t size, Rng& rng) {
  if (size < 1 || size > ds.size())
    throw ConfigError("minibatch: size must be in [1, " + std::to_string(ds.size()) + "]");
  const auto idx = rng.sample_indices(ds.size(), size);
  Batch b;
  b.x = take_rows(ds.features, idx);
  if (!ds.labels.empty()) {
    b.labels.reserve(size);
    for (std::size_t i : idx) b.labels.push_back(ds.labels[i]);
  }
  return b;
}

namespace detail {

inline void rotate_deg(double angle_deg, double x, double y, double& rx, double& ry) {
  const double t = angle_deg * std::numbers::pi / 180.0;
  const double c = std::cos(t), s = std::sin(t);
  rx = c * x - s * y;
  ry = s * x + c * y;
}

struct LatentSample {
  int label;
  double x, y;  // noisy point before rotation
};

// Domains are rotated copies of one shared latent sample set, mirroring
// benchmarks where every domain contains the same underlying items under
// a different shift. Row j of every domain is the same latent point, so
// row-aligned cross-domain batches form genuine joint samples.
inline std::vector<DomainDataset> rotate_latents(const std::vector<LatentSample>& latents,
                                                 const std::vector<double>& angles_deg) {
  if (angles_deg.size() < 3)
    throw ConfigError("rotated generators: need at least 3 angles (source, >=1 intermediate, target)");
  std::vector<DomainDataset> out;
  out.reserve(angles_deg.size());
  for (std::size_t k = 0; k < angles_deg.size(); ++k) {
    DomainDataset ds;
    ds.domain_id = static_cast<int>(k);
    ds.role = (k == 0) ? DomainRole::source
                       : (k + 1 == angles_deg.size() ? DomainRole::target
                                                     : DomainRole::intermediate);
    ds.meta = angles_deg[k];
    ds.features = Matrix(latents.size(), 2);
    std::vector<int> classes(latents.size());
    for (std::size_t j = 0; j < latents.size(); ++j) {
      double rx, ry;
      rotate_deg(angles_deg[k], latents[j].x, latents[j].y, rx, ry);
      ds.features(j, 0) = rx;
      ds.features(j, 1) = ry;
      classes[j] = latents[j].label;
    }
    if (ds.role == DomainRole::source)
      ds.labels = std::move(classes);
    else
      ds.eval_labels = std::move(classes);
    out.push_back(std::move(ds));
  }
  return out;
}

}  // namespace detail

// Two Gaussian blobs, class 0 at (1,0) and class 1 at (-1,0), rotated per
// domain. First angle is the source, last the target.
inline std::vector<DomainDataset> generate_rotated_gaussians(std::size_t n_per_domain,
                                                             const std::vector<double>& angles_deg,
                                                             double noise_sd, std::uint64_t seed) {
  if (n_per_domain < 1) throw ConfigError("generate_rotated_gaussians: n_per_domain must be >= 1");
  if (noise_sd <= 0.0) throw ConfigError("generate_rotated_gaussians: noise_sd must be > 0");
  Rng rng = Rng(seed).fork(0x6761757373ull);
  std::vector<detail::LatentSample> latents(n_per_domain);
  for (std::size_t j = 0; j < n_per_domain; ++j) {
    const int label = static_cast<int>(j % 2);
    const double cx = (label == 0) ? 1.0 : -1.0;
    latents[j] = {label, cx + noise_sd * rng.normal(), noise_sd * rng.normal()};
  }
  return detail::rotate_latents(latents, angles_deg);
}

// Two interleaved half circles (centered so rotations stay around the
// origin), rotated per domain. Harder nonlinear class manifolds, same
// protocol as the Gaussian generator.
inline std::vector<DomainDataset> generate_rotated_moons(std::size_t n_per_domain,
                                                         const std::vector<double>& angles_deg,
                                                         double noise_sd, std::uint64_t seed) {
  if (n_per_domain < 1) throw ConfigError("generate_rotated_moons: n_per_domain must be >= 1");
  if (noise_sd <= 0.0) throw ConfigError("generate_rotated_moons: noise_sd must be > 0");
  Rng rng = Rng(seed).fork(0x6d6f6f6e73ull);
  std::vector<detail::LatentSample> latents(n_per_domain);
  for (std::size_t j = 0; j < n_per_domain; ++j) {
    const int label = static_cast<int>(j % 2);
    const double t = rng.uniform(0.0, std::numbers::pi);
    double x, y;
    if (label == 0) {
      x = std::cos(t) - 0.5;
      y = std::sin(t) - 0.25;
    } else {
      x = 0.5 - std::cos(t);
      y = 0.25 - std::sin(t);
    }
    latents[j] = {label, x + noise_sd * rng.normal(), y + noise_sd * rng.normal()};
  }
  return detail::rotate_latents(latents, angles_deg);
}

// --- CSV ingestion ---------------------------------------------------
//
// Format: header `domain_id,role,label,f0,f1,...`, UTF-8, `.` decimal
// separator, role strings exactly source|intermediate|target. The label
// column is empty for unlabeled rows; labels on non-source rows are only
// accepted when `allow_eval_labels` is set and are routed to the eval
// channel.

inline void save_domains_csv(const std::string& path, const std::vector<DomainDataset>& domains) {
  if (domains.empty()) throw ConfigError("save_domains_csv: no domains");
  std::ofstream out(path);
  if (!out) throw IoError("save_domains_csv: cannot open " + path);
  const std::size_t d = domains.front().dim();
  out << "domain_id,role,label";
  for (std::size_t j = 0; j < d; ++j) out << ",f" << j;
  out << "\n";
  char buf[64];
  for (const DomainDataset& ds : domains) {
    for (std::size_t i = 0; i < ds.size(); ++i) {
      out << ds.domain_id << ',' << to_string(ds.role) << ',';
      if (!ds.labels.empty())
        out << ds.labels[i];
      else if (!ds.eval_labels.empty())
        out << ds.eval_labels[i];
      for (std::size_t j = 0; j < d; ++j) {
        std::snprintf(buf, sizeof(buf), "%.17g", ds.features(i, j));
        out << ',' << buf;
      }
      out << "\n";
    }
  }
  if (!out) throw IoError("save_domains_csv: write failure on " + path);
}

inline std::vector<DomainDataset> load_domains_csv(const std::string& path,
                                                   bool allow_eval_labels = false) {
  std::ifstream in(path);
  if (!in) throw IoError("load_domains_csv: cannot open " + path);
  std::string line;
  if (!std::getline(in, line)) throw ParseError(path + ":1: empty file");
  auto fail = [&](std::size_t lineno, const std::string& what) -> ParseError {
    return ParseError(path + ":" + std::to_string(lineno) + ": " + what);
  };
  auto split = [](const std::string& s) {
    std::vector<std::string> fields;
    std::string cur;
    for (char c : s) {
      if (c == ',') {
        fields.push_back(cur);
        cur.clear();
      } else if (c != '\r') {
        cur += c;
      }
    }
    fields.push_back(cur);
    return fields;
  };
  const auto header = split(line);
  if (header.size() < 4 || header[0] != "domain_id" || header[1] != "role" ||
      header[2] != "label" || header[3] != "f0")
    throw fail(1, "expected header domain_id,role,label,f0,...");
  const std::size_t d = header.size() - 3;

  struct Block {
    DomainRole role;
    std::vector<double> values;
    std::vector<int> labels;  // -1 = unlabeled
    std::size_t first_line;
  };
  std::map<int, Block> blocks;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const auto fields = split(line);
    if (fields.size() != header.size())
      throw fail(lineno, "expected " + std::to_string(header.size()) + " fields, got " +
                             std::to_string(fields.size()));
    int domain_id = 0;
    {
      auto [p, ec] = std::from_chars(fields[0].data(), fields[0].data() + fields[0].size(), domain_id);
      if (ec != std::errc() || p != fields[0].data() + fields[0].size())
        throw fail(lineno, "bad domain_id '" + fields[0] + "'");
    }
    const auto role = parse_role(fields[1]);
    if (!role) throw fail(lineno, "unknown role '" + fields[1] + "'");
    int label = -1;
    if (!fields[2].empty()) {
      auto [p, ec] = std::from_chars(fields[2].data(), fields[2].data() + fields[2].size(), label);
      if (ec != std::errc() || p != fields[2].data() + fields[2].size() || label < 0)
        throw fail(lineno, "bad label '" + fields[2] + "'");
      if (*role != DomainRole::source && !allow_eval_labels)
        throw fail(lineno, "label on a " + to_string(*role) +
                               " row (pass the eval flag to accept held-out labels)");
    }
    auto [it, inserted] = blocks.try_emplace(domain_id, Block{*role, {}, {}, lineno});
    Block& block = it->second;
    if (!inserted && block.role != *role)
      throw fail(lineno, "domain " + std::to_string(domain_id) + " changes role");
    for (std::size_t j = 0; j < d; ++j) {
      const std::string& f = fields[3 + j];
      double v = 0.0;
      auto [p, ec] = std::from_chars(f.data(), f.data() + f.size(), v);
      if (ec != std::errc() || p != f.data() + f.size() || !std::isfinite(v))
        throw fail(lineno, "bad feature value '" + f + "'");
      block.values.push_back(v);
    }
    block.labels.push_back(label);
  }

  std::vector<DomainDataset> out;
  std::size_t n_source = 0, n_target = 0;
  for (auto& [id, block] : blocks) {
    DomainDataset ds;
    ds.domain_id = id;
    ds.role = block.role;
    const std::size_t n = block.labels.size();
    ds.features = Matrix(n, d);
    ds.features.data = std::move(block.values);
    const bool any_label =
        std::any_of(block.labels.begin(), block.labels.end(), [](int l) { return l >= 0; });
    if (any_label) {
      const bool all_label =
          std::all_of(block.labels.begin(), block.labels.end(), [](int l) { return l >= 0; });
      if (!all_label)
        throw fail(block.first_line, "domain " + std::to_string(id) + " is partially labeled");
      if (ds.role == DomainRole::source)
        ds.labels = std::move(block.labels);
      else
        ds.eval_labels = std::move(block.labels);
    } else if (ds.role == DomainRole::source) {
      throw fail(block.first_line, "source domain " + std::to_string(id) + " has no labels");
    }
    n_source += (ds.role == DomainRole::source);
    n_target += (ds.role == DomainRole::target);
    out.push_back(std::move(ds));
  }
  if (n_source != 1 || n_target != 1)
    throw ParseError(path + ": need exactly one source and one target domain (got " +
                     std::to_string(n_source) + " source, " + std::to_string(n_target) +
                     " target)");
  return out;
}

// Splits a dataset list into (source, intermediates, target), validating
// the one-source/one-target/K>=1 contract. Intermediates are ordered by
// meta when every one carries it, else by domain id.
struct DomainSplit {
  const DomainDataset* source = nullptr;
  const DomainDataset* target = nullptr;
  std::vector<const DomainDataset*> intermediates;
};

inline DomainSplit split_domains(const std::vector<DomainDataset>& domains) {
  DomainSplit split;
  for (const DomainDataset& ds : domains) {
    if (ds.size() == 0) throw DataError("split_domains: empty domain " + std::to_string(ds.domain_id));
    switch (ds.role) {
      case DomainRole::source:
        if (split.source) throw DataError("split_domains: more than one source domain");
        split.source = &ds;
        break;
      case DomainRole::target:
        if (split.target) throw DataError("split_domains: more than one target domain");
        split.target = &ds;
        break;
      case DomainRole::intermediate:
        split.intermediates.push_back(&ds);
        break;
    }
  }
  if (!split.source) throw DataError("split_domains: no source domain");
  if (!split.target) throw DataError("split_domains: no target domain");
  if (split.intermediates.empty()) throw DataError("split_domains: no intermediate domains");
  const bool all_meta = std::all_of(split.intermediates.begin(), split.intermediates.end(),
                                    [](const DomainDataset* d) { return d->meta.has_value(); });
  std::sort(split.intermediates.begin(), split.intermediates.end(),
            [all_meta](const DomainDataset* a, const DomainDataset* b) {
              if (all_meta && *a->meta != *b->meta) return *a->meta < *b->meta;
              return a->domain_id < b->domain_id;
            });
  return split;
}

}  // namespace rdsel
