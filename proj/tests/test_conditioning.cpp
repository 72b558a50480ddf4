#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <vector>

#include "excitnet/conditioning.hpp"
#include "excitnet/rng.hpp"

using namespace excitnet;

namespace {

const FeatureLayout kLayout{};  // 40 + 3 + 32 + 4 = 79

std::vector<SpectralFrame> make_spectral(std::size_t n, Rng& rng) {
  std::vector<SpectralFrame> frames(n);
  for (std::size_t k = 0; k < n; ++k) {
    auto& f = frames[k];
    f.lsf.frequencies.resize(40);
    double acc = 0.0;
    for (auto& w : f.lsf.frequencies) {
      acc += rng.uniform(0.01, 0.06);
      w = acc;
    }
    f.prosody.voiced = (k % 3 != 0);
    f.prosody.f0_hz = f.prosody.voiced ? rng.uniform(80.0, 300.0) : 0.0;
    f.prosody.gain_db = rng.uniform(-60.0, 0.0);
  }
  return frames;
}

std::vector<SewRewFrame> make_sewrew(std::size_t n, Rng& rng) {
  std::vector<SewRewFrame> frames(n);
  for (auto& f : frames) {
    f.sew.resize(32);
    f.rew.resize(4);
    for (auto& v : f.sew) v = rng.normal();
    for (auto& v : f.rew) v = rng.normal();
  }
  return frames;
}

}  // namespace

TEST_CASE("assemble packs the fixed 79-dim layout") {
  Rng rng(41);
  const auto spectral = make_spectral(10, rng);
  const auto sewrew = make_sewrew(10, rng);
  const auto rows = assemble(spectral, sewrew, kLayout);

  REQUIRE(rows.size() == 10);
  for (std::size_t k = 0; k < rows.size(); ++k) {
    REQUIRE(rows[k].size() == 79);
    CHECK(rows[k][40] == spectral[k].prosody.f0_hz);
    CHECK(rows[k][41] == (spectral[k].prosody.voiced ? 1.0 : 0.0));
    CHECK(rows[k][42] == spectral[k].prosody.gain_db);
    CHECK(rows[k][0] == spectral[k].lsf.frequencies[0]);
    CHECK(rows[k][43] == sewrew[k].sew[0]);
    CHECK(rows[k][75] == sewrew[k].rew[0]);
  }

  // per-frame map: permuting inputs permutes outputs identically
  std::vector<SpectralFrame> perm_sp(spectral.rbegin(), spectral.rend());
  std::vector<SewRewFrame> perm_ex(sewrew.rbegin(), sewrew.rend());
  const auto perm_rows = assemble(perm_sp, perm_ex, kLayout);
  for (std::size_t k = 0; k < rows.size(); ++k)
    CHECK(perm_rows[k] == rows[rows.size() - 1 - k]);

  const auto fewer = make_sewrew(9, rng);
  CHECK_THROWS(assemble(spectral, fewer, kLayout));
}

TEST_CASE("normalizer uses the population convention") {
  FeatureMatrix rows(2, std::vector<double>(79, 0.5));
  rows[1][0] = 2.0;
  rows[0][0] = 0.0;
  const auto stats = fit_normalizer(rows, kLayout);
  CHECK(stats.mean[0] == doctest::Approx(1.0));
  CHECK(stats.std[0] == doctest::Approx(1.0));

  auto normalized = rows;
  normalize_rows(normalized, stats);
  CHECK(normalized[0][0] == doctest::Approx(-1.0));
  CHECK(normalized[1][0] == doctest::Approx(1.0));

  // constant dimension: floored std, normalized to zero
  CHECK(stats.std[5] == doctest::Approx(1e-6));
  CHECK(normalized[0][5] == doctest::Approx(0.0));

  CHECK_THROWS(fit_normalizer(FeatureMatrix(1, std::vector<double>(79, 0.0)), kLayout));
}

TEST_CASE("normalizing the training set yields zero mean and unit variance") {
  Rng rng(43);
  const auto spectral = make_spectral(200, rng);
  const auto sewrew = make_sewrew(200, rng);
  auto rows = assemble(spectral, sewrew, kLayout);

  const auto stats = fit_normalizer(rows, kLayout);
  normalize_rows(rows, stats);

  for (std::size_t d = 0; d < 79; ++d) {
    if (d == 41) continue;  // vuv passes through
    double mean = 0.0;
    for (const auto& row : rows) mean += row[d];
    mean /= static_cast<double>(rows.size());
    CHECK(std::abs(mean) < 1e-9);
    double var = 0.0;
    for (const auto& row : rows) var += (row[d] - mean) * (row[d] - mean);
    var /= static_cast<double>(rows.size());
    CHECK(std::abs(std::sqrt(var) - 1.0) < 1e-6);
  }

  // vuv dimension untouched by normalization
  for (const auto& row : rows)
    CHECK((row[41] == 0.0 || row[41] == 1.0));
}

TEST_CASE("denormalize inverts normalize") {
  Rng rng(47);
  const auto spectral = make_spectral(50, rng);
  const auto sewrew = make_sewrew(50, rng);
  const auto original = assemble(spectral, sewrew, kLayout);

  auto rows = original;
  const auto stats = fit_normalizer(rows, kLayout);
  normalize_rows(rows, stats);
  denormalize_rows(rows, stats);
  for (std::size_t k = 0; k < rows.size(); ++k)
    for (std::size_t d = 0; d < 79; ++d)
      CHECK(std::abs(rows[k][d] - original[k][d]) < 1e-9);
}

TEST_CASE("upsample duplicates each frame over its shift span") {
  const FrameGrid grid{480, 120};
  FeatureMatrix frames(3, std::vector<double>(79));
  for (std::size_t k = 0; k < 3; ++k)
    for (std::size_t d = 0; d < 79; ++d)
      frames[k][d] = static_cast<double>(k * 100 + d);

  const auto cond = upsample(frames, grid, 250);
  REQUIRE(cond.size() == 250 * 79);
  // rows 0..119 equal frame 0, rows 120..239 equal frame 1, tail frame 2
  for (std::size_t t = 0; t < 250; ++t) {
    const std::size_t expect = t / 120;
    for (std::size_t d = 0; d < 79; ++d)
      CHECK(cond[t * 79 + d] == static_cast<float>(frames[expect][d]));
  }

  // downsampling recovers the frame sequence exactly
  for (std::size_t k = 0; k < 2; ++k)
    for (std::size_t d = 0; d < 79; ++d)
      CHECK(cond[k * 120 * 79 + d] == static_cast<float>(frames[k][d]));

  CHECK_THROWS(upsample(frames, grid, 400));
}

TEST_CASE("feature file round trip and golden bytes") {
  FeatureMatrix rows(2, std::vector<double>(3));
  rows[0] = {1.0, 2.0, 3.0};
  rows[1] = {-1.0, 0.5, 0.0};

  const auto path = std::filesystem::temp_directory_path() / "excitnet_feat.excf";
  write_feature_file(path, rows);

  // golden header: magic, version 1, count 2, dim 3
  std::ifstream in(path, std::ios::binary);
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)),
                                   std::istreambuf_iterator<char>());
  REQUIRE(bytes.size() == 16 + 2 * 3 * 4);
  CHECK(bytes[0] == 'E');
  CHECK(bytes[1] == 'X');
  CHECK(bytes[2] == 'C');
  CHECK(bytes[3] == 'F');
  CHECK(bytes[4] == 1);  // version LE
  CHECK(bytes[5] == 0);
  CHECK(bytes[8] == 2);  // frame count LE
  CHECK(bytes[12] == 3);  // dim LE
  // first float: 1.0f = 0x3f800000 little-endian
  CHECK(bytes[16] == 0x00);
  CHECK(bytes[17] == 0x00);
  CHECK(bytes[18] == 0x80);
  CHECK(bytes[19] == 0x3f);

  const auto back = read_feature_file(path);
  REQUIRE(back.size() == 2);
  CHECK(back[0] == std::vector<double>{1.0, 2.0, 3.0});
  CHECK(back[1] == std::vector<double>{-1.0, 0.5, 0.0});
  std::filesystem::remove(path);
}

TEST_CASE("norm stats json round trip") {
  NormStats stats;
  stats.layout = kLayout.describe();
  stats.mean = {0.5, -2.0, 1e-3};
  stats.std = {1.0, 2.0, 1e-6};

  const auto path = std::filesystem::temp_directory_path() / "excitnet_stats.json";
  save_norm_stats(path, stats);
  const auto back = load_norm_stats(path);
  CHECK(back.layout == stats.layout);
  CHECK(back.mean == stats.mean);
  CHECK(back.std == stats.std);
  std::filesystem::remove(path);
}
