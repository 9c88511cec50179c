#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "catch_amalgamated.hpp"
#include "rdsel/dataset.hpp"
#include "rdsel/transport.hpp"

using namespace rdsel;

namespace {

std::vector<double> even_angles(std::size_t count, double last) {
  std::vector<double> a(count);
  for (std::size_t i = 0; i < count; ++i)
    a[i] = last * static_cast<double>(i) / static_cast<double>(count - 1);
  return a;
}

Matrix class_rows(const DomainDataset& ds, int cls) {
  const auto& labels = ds.labels.empty() ? ds.eval_labels : ds.labels;
  std::vector<std::size_t> idx;
  for (std::size_t i = 0; i < labels.size(); ++i)
    if (labels[i] == cls) idx.push_back(i);
  return take_rows(ds.features, idx);
}

std::string temp_path(const std::string& name) {
  return (std::filesystem::temp_directory_path() / name).string();
}

}  // namespace

TEST_CASE("rotated gaussians: roles, counts, class geometry") {
  const auto domains = generate_rotated_gaussians(1000, even_angles(11, 180.0), 0.2, 5);
  REQUIRE(domains.size() == 11);
  REQUIRE(domains.front().role == DomainRole::source);
  REQUIRE(domains.back().role == DomainRole::target);
  std::size_t intermediates = 0;
  for (const auto& d : domains) {
    REQUIRE(d.size() == 1000);
    intermediates += d.role == DomainRole::intermediate;
  }
  REQUIRE(intermediates == 9);

  // angle 0: class-0 mean near (1, 0) within 3 sd / sqrt(n)
  const Matrix c0 = class_rows(domains[0], 0);
  const auto mean0 = col_mean(c0);
  const double bound = 3.0 * 0.2 / std::sqrt(static_cast<double>(c0.rows));
  REQUIRE(std::fabs(mean0[0] - 1.0) < bound);
  REQUIRE(std::fabs(mean0[1]) < bound);

  // angle 180: classes swap sides
  const auto mean180 = col_mean(class_rows(domains[10], 0));
  REQUIRE(std::fabs(mean180[0] + 1.0) < bound);

  // source labeled, others only in the eval channel
  REQUIRE(!domains[0].labels.empty());
  for (std::size_t k = 1; k < domains.size(); ++k) {
    REQUIRE(domains[k].labels.empty());
    REQUIRE(!domains[k].eval_labels.empty());
  }

  REQUIRE_THROWS_AS(generate_rotated_gaussians(100, {0.0, 180.0}, 0.2, 5), ConfigError);
  REQUIRE_THROWS_AS(generate_rotated_gaussians(100, even_angles(3, 90.0), 0.0, 5), ConfigError);
}

TEST_CASE("rotated moons: determinism and inverse rotation") {
  const auto a = generate_rotated_moons(400, even_angles(4, 54.0), 0.1, 9);
  const auto b = generate_rotated_moons(400, even_angles(4, 54.0), 0.1, 9);
  REQUIRE(a.size() == 4);
  for (std::size_t k = 0; k < a.size(); ++k) {
    REQUIRE(a[k].size() == 400);
    REQUIRE(a[k].features.data == b[k].features.data);
  }

  // rotating domain(18 deg) back by -18 deg reproduces domain(0)
  const auto domains = generate_rotated_moons(600, {0.0, 18.0, 36.0}, 0.1, 13);
  Matrix unrotated(600, 2);
  const double t = -18.0 * std::numbers::pi / 180.0;
  for (std::size_t i = 0; i < 600; ++i) {
    const double x = domains[1].features(i, 0), y = domains[1].features(i, 1);
    unrotated(i, 0) = std::cos(t) * x - std::sin(t) * y;
    unrotated(i, 1) = std::sin(t) * x + std::cos(t) * y;
  }
  const double dist =
      wasserstein_sliced({unrotated}, {domains[0].features}, 32, 3).value;
  REQUIRE(dist < 0.05);
}

TEST_CASE("sliced distance from source grows with angle gap") {
  const auto domains = generate_rotated_gaussians(1000, even_angles(6, 90.0), 0.15, 21);
  double prev = -1.0;
  for (std::size_t k = 1; k < domains.size(); ++k) {
    const double d =
        wasserstein_sliced({domains[0].features}, {domains[k].features}, 256, 17).value;
    REQUIRE(d > prev);
    prev = d;
  }
}

TEST_CASE("minibatch sampling contract") {
  const auto domains = generate_rotated_gaussians(50, even_angles(3, 36.0), 0.1, 3);
  const DomainDataset& src = domains[0];

  Rng rng(1);
  const Batch full = minibatch(src, 50, rng);
  REQUIRE(full.x.rows == 50);
  REQUIRE(full.labels.size() == 50);
  // permutation of the dataset: sorted feature sums match
  auto sum_rows = [](const Matrix& m) {
    std::vector<double> s;
    for (std::size_t i = 0; i < m.rows; ++i) s.push_back(m(i, 0) + m(i, 1));
    std::sort(s.begin(), s.end());
    return s;
  };
  REQUIRE(sum_rows(full.x) == sum_rows(src.features));

  Rng r1(9), r2(9);
  const Batch b1 = minibatch(src, 16, r1);
  const Batch b2 = minibatch(src, 16, r2);
  REQUIRE(b1.x.data == b2.x.data);
  REQUIRE(b1.labels == b2.labels);

  const Batch one = minibatch(src, 1, rng);
  REQUIRE(one.x.rows == 1);
  bool found = false;
  for (std::size_t i = 0; i < src.size() && !found; ++i)
    found = src.features(i, 0) == one.x(0, 0) && src.features(i, 1) == one.x(0, 1);
  REQUIRE(found);

  REQUIRE_THROWS_AS(minibatch(src, 51, rng), ConfigError);
  REQUIRE_THROWS_AS(minibatch(src, 0, rng), ConfigError);

  // unlabeled domains yield label-free batches
  const Batch t = minibatch(domains[2], 8, rng);
  REQUIRE(t.labels.empty());
}

TEST_CASE("csv round trip preserves matrices exactly") {
  const auto domains = generate_rotated_gaussians(40, even_angles(3, 36.0), 0.2, 11);
  const std::string path = temp_path("rdsel_roundtrip.csv");
  save_domains_csv(path, domains);
  const auto loaded = load_domains_csv(path, /*allow_eval_labels=*/true);
  REQUIRE(loaded.size() == 3);
  for (std::size_t k = 0; k < 3; ++k) {
    REQUIRE(loaded[k].domain_id == domains[k].domain_id);
    REQUIRE(loaded[k].role == domains[k].role);
    REQUIRE(loaded[k].features.rows == domains[k].features.rows);
    for (std::size_t i = 0; i < loaded[k].features.data.size(); ++i)
      REQUIRE(loaded[k].features.data[i] ==
              Catch::Approx(domains[k].features.data[i]).margin(1e-12));
  }
  REQUIRE(loaded[0].labels == domains[0].labels);
  REQUIRE(loaded[1].eval_labels == domains[1].eval_labels);
  REQUIRE(loaded[2].eval_labels == domains[2].eval_labels);
  std::remove(path.c_str());
}

TEST_CASE("csv loader rejects malformed input with line numbers") {
  const std::string path = temp_path("rdsel_bad.csv");

  auto write_and_try = [&](const std::string& body) {
    std::ofstream out(path);
    out << body;
    out.close();
    return path;
  };

  // three clean domains parse
  write_and_try(
      "domain_id,role,label,f0,f1\n"
      "0,source,0,0.1,0.2\n"
      "0,source,1,0.3,0.4\n"
      "1,intermediate,,1,2\n"
      "2,target,,3,4\n");
  REQUIRE(load_domains_csv(path).size() == 3);

  // ragged row names its line
  write_and_try(
      "domain_id,role,label,f0,f1\n"
      "0,source,0,0.1,0.2\n"
      "1,intermediate,,1,2,3\n"
      "2,target,,3,4\n");
  try {
    load_domains_csv(path);
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    REQUIRE(std::string(e.what()).find(":3:") != std::string::npos);
  }

  // unknown role
  write_and_try(
      "domain_id,role,label,f0,f1\n"
      "0,src,0,0.1,0.2\n");
  REQUIRE_THROWS_AS(load_domains_csv(path), ParseError);

  // label on a non-source row without the eval flag
  write_and_try(
      "domain_id,role,label,f0,f1\n"
      "0,source,0,0.1,0.2\n"
      "1,intermediate,1,1,2\n"
      "2,target,,3,4\n");
  REQUIRE_THROWS_AS(load_domains_csv(path), ParseError);
  REQUIRE_NOTHROW(load_domains_csv(path, /*allow_eval_labels=*/true));

  // role counts enforced
  write_and_try(
      "domain_id,role,label,f0,f1\n"
      "0,source,0,0.1,0.2\n"
      "1,intermediate,,1,2\n");
  REQUIRE_THROWS_AS(load_domains_csv(path), ParseError);

  std::remove(path.c_str());
}

TEST_CASE("split_domains orders intermediates by meta") {
  auto domains = generate_rotated_gaussians(20, {0.0, 36.0, 18.0, 54.0}, 0.1, 2);
  // shuffle the list; split must re-derive roles and order
  std::swap(domains[0], domains[2]);
  const DomainSplit split = split_domains(domains);
  REQUIRE(split.source->meta == 0.0);
  REQUIRE(split.target->meta == 54.0);
  REQUIRE(split.intermediates.size() == 2);
  REQUIRE(*split.intermediates[0]->meta == 18.0);
  REQUIRE(*split.intermediates[1]->meta == 36.0);
}
