#include <braidgeo/scalars.hpp>

#include <catch2/catch_amalgamated.hpp>

#include <random>

using namespace braidgeo;

namespace {

GaussianRational random_scalar(std::mt19937_64& rng) {
    std::uniform_int_distribution<long long> num(-9, 9);
    std::uniform_int_distribution<long long> den(1, 9);
    return GaussianRational(num(rng), den(rng)) +
           GaussianRational(num(rng), den(rng)) * GaussianRational::i();
}

Series random_series(std::mt19937_64& rng, int order) {
    Series s(order);
    for (int k = 0; k <= order; ++k) s.c[k] = random_scalar(rng);
    return s;
}

} // namespace

TEST_CASE("gaussian rationals normalize and do exact field arithmetic") {
    GaussianRational a(2, 4);
    REQUIRE(numerator(a.re) == 1);
    REQUIRE(denominator(a.re) == 2);

    GaussianRational b(-3, 6);
    REQUIRE(a + b == GaussianRational(0));
    REQUIRE((a * GaussianRational(4)) == GaussianRational(2));

    GaussianRational z = GaussianRational(1, 2) + GaussianRational(3, 4) * GaussianRational::i();
    GaussianRational w = GaussianRational(-2, 1) + GaussianRational(1, 3) * GaussianRational::i();
    REQUIRE(z * w / w == z);
    REQUIRE((z / z) == GaussianRational(1));

    REQUIRE(GaussianRational::i() * GaussianRational::i() == GaussianRational(-1));
    REQUIRE_THROWS_AS(z / GaussianRational(0), std::domain_error);
}

TEST_CASE("gaussian rational text form round-trips bit-exactly") {
    auto roundtrip = [](const GaussianRational& g) {
        REQUIRE(parse_gaussian_rational(to_string(g)) == g);
    };
    roundtrip(GaussianRational(0));
    roundtrip(GaussianRational(7));
    roundtrip(GaussianRational(-2, 3));
    roundtrip(GaussianRational::i());
    roundtrip(-GaussianRational::i());
    roundtrip(GaussianRational(Rat(0), Rat(-5) / Rat(4)));
    roundtrip(GaussianRational(Rat(1) / Rat(2), Rat(3) / Rat(4)));
    roundtrip(GaussianRational(Rat(-1) / Rat(2), Rat(-3) / Rat(4)));
    roundtrip(GaussianRational(Rat(5), Rat(1)));
    roundtrip(GaussianRational(Rat(5), Rat(-1)));

    REQUIRE(to_string(GaussianRational(1, 2)) == "1/2");
    REQUIRE(to_string(GaussianRational(Rat(1) / Rat(2), Rat(3) / Rat(4))) == "1/2+3/4 i");
    REQUIRE(to_string(GaussianRational(Rat(0), Rat(1))) == "i");
    REQUIRE(parse_gaussian_rational("2i") == GaussianRational(Rat(0), Rat(2)));
    REQUIRE(parse_gaussian_rational("-1/2 - 3 i") == GaussianRational(Rat(-1) / Rat(2), Rat(-3)));

    std::mt19937_64 rng(12);
    for (int t = 0; t < 200; ++t) roundtrip(random_scalar(rng));

    REQUIRE_THROWS_AS(parse_gaussian_rational("1/0"), std::domain_error);
    REQUIRE_THROWS_AS(parse_gaussian_rational("x"), std::invalid_argument);
    REQUIRE_THROWS_AS(parse_gaussian_rational(""), std::invalid_argument);
}

TEST_CASE("series arithmetic truncates exactly at the shared order") {
    // (1 + h) * (1 - h) at N=2 -> 1 - h^2
    Series one_plus_h = Series::one(2) + Series::h_power(2, 1);
    Series one_minus_h = Series::one(2) - Series::h_power(2, 1);
    Series expect = Series::one(2) - Series::h_power(2, 2);
    REQUIRE(one_plus_h * one_minus_h == expect);

    REQUIRE(Series::one(3) + Series::zero(3) == Series::one(3));

    // (2/3 h) * (3/2 h) at N=2 -> h^2
    Series a = Series::h_power(2, 1).scaled(GaussianRational(2, 3));
    Series b = Series::h_power(2, 1).scaled(GaussianRational(3, 2));
    REQUIRE(a * b == Series::h_power(2, 2));

    // degrees above N vanish
    REQUIRE((Series::h_power(1, 1) * Series::h_power(1, 1)).is_zero());

    REQUIRE_THROWS_AS(Series::one(2) + Series::one(3), std::invalid_argument);
    REQUIRE_THROWS_AS(Series::one(2) * Series::one(1), std::invalid_argument);
}

TEST_CASE("series inversion by geometric recursion") {
    // 1 + h at N=2 -> 1 - h + h^2
    Series a = Series::one(2) + Series::h_power(2, 1);
    Series expect = Series::one(2) - Series::h_power(2, 1) + Series::h_power(2, 2);
    REQUIRE(series_invert(a) == expect);

    // constant 2 at N=1 -> 1/2
    REQUIRE(series_invert(Series::constant(1, 2)) == Series::constant(1, GaussianRational(1, 2)));

    // 1 - 3h at N=1 -> 1 + 3h
    Series b = Series::one(1) - Series::h_power(1, 1).scaled(3);
    REQUIRE(series_invert(b) == Series::one(1) + Series::h_power(1, 1).scaled(3));

    REQUIRE_THROWS_AS(series_invert(Series::h_power(2, 1)), std::domain_error);
}

TEST_CASE("series properties on random data") {
    std::mt19937_64 rng(2024);
    for (int t = 0; t < 50; ++t) {
        int N = 1 + static_cast<int>(rng() % 3);
        Series a = random_series(rng, N);
        Series b = random_series(rng, N);
        Series c = random_series(rng, N);

        REQUIRE((a * b) * c == a * (b * c));
        REQUIRE(a * (b + c) == a * b + a * c);
        REQUIRE(a + b == b + a);
        REQUIRE(a * b == b * a);

        if (!a.is_unit()) a.c[0] = GaussianRational(1, 3);
        REQUIRE(series_invert(series_invert(a)) == a);
        REQUIRE(a * series_invert(a) == Series::one(N));
    }
}

TEST_CASE("series printing") {
    Series s(2);
    s.c[0] = GaussianRational(1);
    s.c[2] = GaussianRational(-1, 2);
    REQUIRE(to_string(s) == "1 + -1/2*h^2");
    REQUIRE(to_string(Series::zero(1)) == "0");
    Series t(1);
    t.c[1] = GaussianRational(Rat(0), Rat(1));
    REQUIRE(to_string(t) == "i*h");
}
