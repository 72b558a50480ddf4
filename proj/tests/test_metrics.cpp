#include <doctest.h>

#include <cmath>
#include <vector>

#include "excitnet/metrics.hpp"
#include "excitnet/rng.hpp"
#include "test_support.hpp"

using namespace excitnet;

namespace {

const FrameGrid kGrid{480, 120};

Waveform noise_wave(std::uint64_t seed, std::size_t n) {
  Rng rng(seed);
  Waveform w;
  w.samples.resize(n);
  for (auto& v : w.samples) v = 0.3 * rng.normal();
  return w;
}

}  // namespace

TEST_CASE("lsd of identical signals is zero") {
  const auto w = noise_wave(301, 12000);
  CHECK(lsd(w, w, kGrid) == doctest::Approx(0.0));
}

TEST_CASE("lsd scale law: 2x amplitude is 20 log10 2 dB in every bin") {
  const auto w = noise_wave(303, 12000);
  Waveform scaled = w;
  for (auto& v : scaled.samples) v *= 2.0;
  // eps breaks the identity only in empty bins; noise fills the spectrum
  CHECK(lsd(w, scaled, kGrid) == doctest::Approx(20.0 * std::log10(2.0)).epsilon(1e-3));

  // symmetry
  CHECK(lsd(w, scaled, kGrid) == doctest::Approx(lsd(scaled, w, kGrid)).epsilon(1e-12));
}

TEST_CASE("lsd toy values: hand-computed per-frame rms of bin differences") {
  // one frame, constructed so exactly two distinct magnitudes appear is hard
  // through the fft; instead check the rms form on the scale identity with a
  // known factor: diffs of 20 dB in every bin give lsd 20
  const auto w = noise_wave(307, 480);
  Waveform scaled = w;
  for (auto& v : scaled.samples) v *= 10.0;
  CHECK(lsd(w, scaled, kGrid) == doctest::Approx(20.0).epsilon(1e-3));
}

TEST_CASE("lsd rejects signals that differ by more than one frame") {
  const auto a = noise_wave(311, 12000);
  const auto b = noise_wave(313, 12000 + 481);
  CHECK_THROWS(lsd(a, b, kGrid));
  // within one frame: allowed, trims to the shorter signal
  const auto c = noise_wave(317, 12000 + 200);
  CHECK_NOTHROW(lsd(a, c, kGrid));
}

TEST_CASE("transition-region definition unfolds the stated example") {
  // voicing pattern V V U U: frames 1 and 2 are transitions, so the
  // uv/transition set is {1, 2, 3}
  std::vector<ProsodyFrame> prosody(4);
  prosody[0] = {120.0, true, -20.0};
  prosody[1] = {120.0, true, -20.0};
  prosody[2] = {0.0, false, -40.0};
  prosody[3] = {0.0, false, -40.0};

  const auto a = noise_wave(331, 4 * 120);
  const auto b = noise_wave(333, 4 * 120);
  const auto regions = lsd_by_region(a, b, prosody, kGrid);
  CHECK(regions.voiced_frames == 1);
  CHECK(regions.uv_transition_frames == 3);
}

TEST_CASE("all-voiced prosody leaves the uv/transition set empty") {
  std::vector<ProsodyFrame> prosody(10, ProsodyFrame{150.0, true, -20.0});
  const auto a = noise_wave(337, 10 * 120);
  const auto b = noise_wave(339, 10 * 120);
  const auto regions = lsd_by_region(a, b, prosody, kGrid);
  CHECK(regions.uv_transition_frames == 0);
  CHECK_FALSE(regions.uv_transition_db.has_value());
  CHECK(regions.voiced_frames == 10);
}

TEST_CASE("region lsd recombines to the overall lsd") {
  const auto a = testsupport::synthetic_speech(341, 1.0);
  auto b = a;
  Rng rng(343);
  for (auto& v : b.samples) v += 0.01 * rng.normal();

  const auto per_frame = lsd_per_frame(a, b, kGrid);
  const double overall = lsd(a, b, kGrid);

  std::vector<ProsodyFrame> prosody(per_frame.size());
  for (std::size_t k = 0; k < prosody.size(); ++k)
    prosody[k] = ProsodyFrame{k % 7 < 4 ? 120.0 : 0.0, k % 7 < 4, -20.0};
  const auto regions = lsd_by_region(a, b, prosody, kGrid);

  // frame partition: disjoint and covering
  CHECK(regions.voiced_frames + regions.uv_transition_frames == per_frame.size());
  double recombined = 0.0;
  if (regions.voiced_db)
    recombined += *regions.voiced_db * static_cast<double>(regions.voiced_frames);
  if (regions.uv_transition_db)
    recombined += *regions.uv_transition_db * static_cast<double>(regions.uv_transition_frames);
  recombined /= static_cast<double>(per_frame.size());
  CHECK(recombined == doctest::Approx(overall).epsilon(1e-9));
}

TEST_CASE("f0 rmse hand-computed case and intersection rule") {
  std::vector<ProsodyFrame> ref{{100.0, true, 0.0}, {200.0, true, 0.0}};
  std::vector<ProsodyFrame> test{{110.0, true, 0.0}, {190.0, true, 0.0}};
  const auto result = f0_rmse(ref, test);
  REQUIRE(result.rmse_hz.has_value());
  CHECK(*result.rmse_hz == doctest::Approx(10.0).epsilon(1e-12));
  CHECK(result.compared_frames == 2);

  // identical prosody: zero error
  const auto same = f0_rmse(ref, ref);
  CHECK(*same.rmse_hz == doctest::Approx(0.0));

  // frames voiced in only one track are excluded and change nothing
  auto ref2 = ref;
  auto test2 = test;
  ref2.push_back({150.0, true, 0.0});
  test2.push_back({0.0, false, 0.0});
  ref2.push_back({0.0, false, 0.0});
  test2.push_back({170.0, true, 0.0});
  const auto padded = f0_rmse(ref2, test2);
  CHECK(*padded.rmse_hz == doctest::Approx(10.0).epsilon(1e-12));
  CHECK(padded.compared_frames == 2);

  // no both-voiced frames: value absent
  std::vector<ProsodyFrame> unvoiced(3);
  const auto empty = f0_rmse(unvoiced, unvoiced);
  CHECK_FALSE(empty.rmse_hz.has_value());
}

TEST_CASE("aggregate is the frame-weighted mean of per-utterance reports") {
  EvalReport a;
  a.name = "a";
  a.lsd_db = 2.0;
  a.frames_total = 100;
  a.f0_rmse_hz = 5.0;
  a.frames_f0_compared = 40;
  EvalReport b;
  b.name = "b";
  b.lsd_db = 4.0;
  b.frames_total = 300;
  b.f0_rmse_hz = 10.0;
  b.frames_f0_compared = 10;

  std::vector<EvalReport> reports{a, b};
  const auto agg = aggregate_reports(reports);
  CHECK(agg.lsd_db == doctest::Approx((2.0 * 100 + 4.0 * 300) / 400.0));
  CHECK(*agg.f0_rmse_hz == doctest::Approx((5.0 * 40 + 10.0 * 10) / 50.0));
  CHECK(agg.frames_total == 400);
}

TEST_CASE("evaluate_pair produces a full report on synthetic speech") {
  const auto ref = testsupport::synthetic_speech(347, 1.2);
  auto test = ref;
  Rng rng(349);
  for (auto& v : test.samples) v += 0.005 * rng.normal();

  const auto report = evaluate_pair("utt", ref, test, kGrid);
  CHECK(report.frames_total == kGrid.num_frames(ref.samples.size()));
  CHECK(report.lsd_db > 0.0);
  CHECK(report.frames_voiced_region + report.frames_uv_transition == report.frames_total);

  // self comparison: all metrics zero
  const auto self_report = evaluate_pair("self", ref, ref, kGrid);
  CHECK(self_report.lsd_db == doctest::Approx(0.0));
  if (self_report.f0_rmse_hz) CHECK(*self_report.f0_rmse_hz == doctest::Approx(0.0));
}
