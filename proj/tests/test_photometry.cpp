#include <gtest/gtest.h>

#include <fstream>

#include "oracles.hpp"
#include "vrsom/photometry.hpp"

using namespace vrsom;
using namespace vrsom::photometry;

TEST(Tables, AmbientIncreasesWithLevel) {
    for (int l = 2; l <= 6; ++l) EXPECT_GT(ambient_intensity(LightLevel(l)), ambient_intensity(LightLevel(l - 1)));
    EXPECT_EQ(ambient_intensity(LightLevel(1)), 23);
    EXPECT_EQ(ambient_intensity(LightLevel(6)), 175);
}

TEST(Tables, RenderedGreyAndLuminanceIncreaseWithLevel) {
    for (auto e : kAllElements)
        for (int l = 2; l <= 6; ++l) {
            EXPECT_GE(rendered_grey(e, LightLevel(l)), rendered_grey(e, LightLevel(l - 1))) << to_string(e);
            EXPECT_GT(estimated_luminance(e, LightLevel(l)), estimated_luminance(e, LightLevel(l - 1))) << to_string(e);
        }
}

TEST(Tables, ObjectGreysOrderedAtEveryLevel) {
    for (int l = 1; l <= 6; ++l) {
        const LightLevel lv(l);
        EXPECT_GE(object_luminance(134, lv), object_luminance(111, lv));
        EXPECT_GE(object_luminance(111, lv), object_luminance(83, lv));
        EXPECT_GE(rendered_grey(ElementKind::clear, lv), rendered_grey(ElementKind::medium, lv));
        EXPECT_GE(rendered_grey(ElementKind::medium, lv), rendered_grey(ElementKind::dark, lv));
    }
}

TEST(Tables, LuminanceMonotoneInRenderedGrey) {
    for (auto a : kAllElements)
        for (auto b : kAllElements)
            for (int la = 1; la <= 6; ++la)
                for (int lb = 1; lb <= 6; ++lb) {
                    const int ga = rendered_grey(a, LightLevel(la)), gb = rendered_grey(b, LightLevel(lb));
                    if (ga < gb) EXPECT_LE(estimated_luminance(a, LightLevel(la)), estimated_luminance(b, LightLevel(lb)));
                }
}

TEST(Tables, KnownValues) {
    EXPECT_DOUBLE_EQ(estimated_luminance(ElementKind::clear, LightLevel(1)), 0.438);
    EXPECT_DOUBLE_EQ(estimated_luminance(ElementKind::clear, LightLevel(6)), 13.7);
    EXPECT_DOUBLE_EQ(estimated_luminance(ElementKind::medium, LightLevel(1)), 0.216);
    EXPECT_EQ(material_grey(ElementKind::walls), 155);
    EXPECT_EQ(element_for_object_grey(111), ElementKind::medium);
    EXPECT_THROW(element_for_object_grey(100), DomainError);
}

TEST(Curve, ExactAtAnchors) {
    const auto& c = builtin_curve();
    for (const auto& a : builtin_anchor_pairs()) EXPECT_EQ(luminance_from_grey(a.grey), a.luminance);
    EXPECT_EQ(c.min_grey(), 0);
    EXPECT_EQ(c.max_grey(), 83);
}

TEST(Curve, DuplicateGreyKeepsFirstOccurrence) {
    EXPECT_EQ(luminance_from_grey(58), 9.11);
    const auto pairs = builtin_anchor_pairs();
    EXPECT_EQ(std::count_if(pairs.begin(), pairs.end(), [](const auto& a) { return a.grey == 58; }), 1);
}

TEST(Curve, InterpolatesLinearlyAndRefusesToExtrapolate) {
    const CalibrationCurve c({{0, 0.1}, {10, 1.1}, {20, 3.1}});
    EXPECT_DOUBLE_EQ(c(5), 0.6);
    EXPECT_DOUBLE_EQ(c(15), 2.1);
    EXPECT_THROW(c(-1), DomainError);
    EXPECT_THROW(c(20.5), DomainError);
    EXPECT_THROW(CalibrationCurve({{0, 1.0}, {10, 0.5}}), DomainError);
    EXPECT_THROW(CalibrationCurve({{0, 1.0}}), DomainError);
}

TEST(Curve, MonotoneOverItsSpan) {
    double prev = -1;
    for (double g = 0; g <= 83; g += 0.25) {
        const double v = luminance_from_grey(g);
        EXPECT_GE(v, prev);
        prev = v;
    }
}

TEST(Curve, AnchorFile) {
    const auto dir = oracle::fresh_dir("anchors");
    {
        std::ofstream f(dir / "a.csv");
        f << "grey,luminance\n# comment\n0,0.1\n50;2.0\n100\t5.0\n";
    }
    const auto c = load_anchor_file(dir / "a.csv");
    EXPECT_DOUBLE_EQ(c(75), 3.5);
    {
        std::ofstream f(dir / "bad.csv");
        f << "0,0.1\n10,0.05\n";
    }
    EXPECT_THROW(load_anchor_file(dir / "bad.csv"), ParseError);
    EXPECT_THROW(load_anchor_file(dir / "missing.csv"), IoError);
}
