#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <tuple>

#include "seld/core.hpp"
#include "seld/errors.hpp"
#include "seld/rng.hpp"

using namespace seld;

namespace {

void check_vec(const DoaVector& v, double x, double y, double z, double tol = 1e-12) {
  CHECK(std::abs(v.x - x) <= tol);
  CHECK(std::abs(v.y - y) <= tol);
  CHECK(std::abs(v.z - z) <= tol);
}

// Rodrigues rotation of v about unit axis k by angle theta (radians).
DoaVector rotate(const DoaVector& v, const DoaVector& k, double theta) {
  const double c = std::cos(theta), s = std::sin(theta);
  const DoaVector kxv{k.y * v.z - k.z * v.y, k.z * v.x - k.x * v.z, k.x * v.y - k.y * v.x};
  const double kdv = k.dot(v);
  return {v.x * c + kxv.x * s + k.x * kdv * (1 - c), v.y * c + kxv.y * s + k.y * kdv * (1 - c),
          v.z * c + kxv.z * s + k.z * kdv * (1 - c)};
}

}  // namespace

TEST_CASE("constants describe the 156-neuron multi-ACCDOA head") {
  CHECK(kOutputNeurons == kNumTracks * kNumClasses * 4);
  CHECK(kOutputNeurons == 156);
  CHECK(kLabelFrameSamples % kStftHop == 0);
  CHECK(kFramesPerLabel == 5);
  CHECK(kHopMs == 20.0);
}

TEST_CASE("sph_to_cart axis and pole cases") {
  check_vec(sph_to_cart(0, 0), 1, 0, 0, 0.0);
  check_vec(sph_to_cart(90, 0), 0, 1, 0, 0.0);
  check_vec(sph_to_cart(0, 90), 0, 0, 1, 0.0);
  check_vec(sph_to_cart(180, 0), -1, 0, 0, 0.0);
  CHECK_THROWS_AS(sph_to_cart(-180, 0), DomainError);
  CHECK_THROWS_AS(sph_to_cart(0, 91), DomainError);
  CHECK_THROWS_AS(sph_to_cart(181, 0), DomainError);
}

TEST_CASE("cart_to_sph conventions") {
  auto [az, el] = cart_to_sph({0, 0, 1});
  CHECK(az == 0.0);
  CHECK(el == 90.0);
  std::tie(az, el) = cart_to_sph({-1, 0, 0});
  CHECK(az == 180.0);
  CHECK(el == 0.0);
  std::tie(az, el) = cart_to_sph({-1, -0.0, 0});
  CHECK(az == 180.0);
  std::tie(az, el) = cart_to_sph({0.5, 0.5, 0.7071});
  CHECK(az == doctest::Approx(45.0).epsilon(1e-9));
  CHECK(el == doctest::Approx(45.0).epsilon(1e-4));
  // Round trip of the recovered angles lands on the normalized input.
  const DoaVector back = sph_to_cart(az, el);
  const DoaVector unit = DoaVector{0.5, 0.5, 0.7071}.normalized();
  check_vec(back, unit.x, unit.y, unit.z, 1e-12);
  CHECK_THROWS_AS(cart_to_sph({0, 0, 0}), DomainError);
}

TEST_CASE("sph/cart round trip over a dense grid") {
  double worst = 0.0;
  for (double el = -89.5; el <= 89.5; el += 0.5) {
    for (double az = -179.5; az <= 180.0; az += 0.5) {
      const DoaVector v = sph_to_cart(az, el);
      CHECK(std::abs(v.norm() - 1.0) <= 1e-12);
      const auto [a2, e2] = cart_to_sph(v);
      worst = std::max({worst, std::abs(a2 - az), std::abs(e2 - el)});
    }
  }
  CHECK(worst <= 1e-9);
}

TEST_CASE("angular_distance identities") {
  CHECK(angular_distance({1, 0, 0}, {1, 0, 0}) == 0.0);
  CHECK(angular_distance({1, 0, 0}, {0, 1, 0}) == doctest::Approx(90.0).epsilon(1e-12));
  CHECK(angular_distance({1, 0, 0}, {-1, 0, 0}) == doctest::Approx(180.0).epsilon(1e-12));
  CHECK(angular_distance({2, 0, 0}, {0, 0, 3}) == doctest::Approx(90.0).epsilon(1e-12));
  CHECK_THROWS_AS(angular_distance({0, 0, 0}, {1, 0, 0}), DomainError);
}

TEST_CASE("angular_distance recovers random rotation angles") {
  Rng rng(7);
  double worst = 0.0;
  for (int i = 0; i < 2000; ++i) {
    const DoaVector axis = DoaVector{rng.normal(), rng.normal(), rng.normal()}.normalized();
    // Random vector orthogonal to the axis, so the angle between u and Q u
    // equals the rotation angle.
    DoaVector r{rng.normal(), rng.normal(), rng.normal()};
    r = r + (-r.dot(axis)) * axis;
    const DoaVector u = r.normalized();
    const double theta_deg = rng.uniform(0.0, 180.0);
    const DoaVector q = rotate(u, axis, deg2rad(theta_deg));
    worst = std::max(worst, std::abs(angular_distance(u, q) - theta_deg));
    CHECK(angular_distance(u, q) == angular_distance(q, u));
  }
  CHECK(worst <= 1e-6);
}

TEST_CASE("wrap_azimuth maps into (-180, 180]") {
  CHECK(wrap_azimuth(-180.0) == 180.0);
  CHECK(wrap_azimuth(190.0) == -170.0);
  CHECK(wrap_azimuth(540.0) == 180.0);
  CHECK(wrap_azimuth(-90.0) == -90.0);
}

TEST_CASE("MetadataTable sorts and rejects duplicates") {
  MetadataTable t({{2, 1, 0, 0, 0, 1}, {1, 5, 0, 0, 0, 1}, {1, 2, 1, 0, 0, 1}, {1, 2, 0, 0, 0, 1}});
  REQUIRE(t.size() == 4);
  CHECK(t.rows()[0].frame == 1);
  CHECK(t.rows()[0].class_id == 2);
  CHECK(t.rows()[0].source_id == 0);
  CHECK(t.rows()[3].frame == 2);
  CHECK(t.num_frames() == 3);
  CHECK_THROWS_AS(MetadataTable({{1, 1, 0, 0, 0, 1}, {1, 1, 0, 10, 0, 1}}), DataError);
  CHECK_THROWS_AS(MetadataTable({{1, 13, 0, 0, 0, 1}}), DomainError);
  CHECK_THROWS_AS(MetadataTable({{1, 1, 0, 0, 0, 0}}), DomainError);
}

TEST_CASE("FoaClip validation") {
  FoaClip clip = FoaClip::zeros(10);
  CHECK_NOTHROW(clip.validate());
  clip.samples[2][3] = NAN;
  CHECK_THROWS_AS(clip.validate(), DomainError);
  clip = FoaClip::zeros(10);
  clip.sample_rate = 48000;
  CHECK_THROWS_AS(clip.validate(), DomainError);
}

TEST_CASE("Rng is reproducible and in range") {
  Rng a(42), b(42);
  for (int i = 0; i < 100; ++i) CHECK(a.next_u64() == b.next_u64());
  Rng r(1);
  int counts[9] = {};
  for (int i = 0; i < 9000; ++i) {
    const auto v = r.uniform_int(-4, 4);
    REQUIRE(v >= -4);
    REQUIRE(v <= 4);
    counts[v + 4]++;
  }
  for (int c : counts) CHECK(c > 800);
  double sum = 0, sq = 0;
  for (int i = 0; i < 20000; ++i) {
    const double x = r.normal();
    sum += x;
    sq += x * x;
  }
  CHECK(std::abs(sum / 20000) < 0.03);
  CHECK(std::abs(sq / 20000 - 1.0) < 0.05);
  // mt19937_64's 10000th output is fixed by the standard.
  Rng d(5489);
  std::uint64_t v = 0;
  for (int i = 0; i < 10000; ++i) v = d.next_u64();
  CHECK(v == 9981545732273789042ULL);
}
