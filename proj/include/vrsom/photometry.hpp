#pragma once

// Lighting of the virtual environment: ambient intensity per lighting level,
// rendered grey values of each scene element, the luminance those greys
// produce on the headset display, and a grey -> luminance calibration curve.

#include <algorithm>
#include <array>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "vrsom/core_model.hpp"
#include "vrsom/error.hpp"

namespace vrsom::photometry {

enum class ElementKind { clear, medium, dark, path, floor, arrows, walls, ceiling };

inline constexpr std::array<ElementKind, 8> kAllElements{ElementKind::clear, ElementKind::medium, ElementKind::dark,
                                                         ElementKind::path,  ElementKind::floor,  ElementKind::arrows,
                                                         ElementKind::walls, ElementKind::ceiling};

inline std::string_view to_string(ElementKind e) noexcept {
    constexpr std::array<std::string_view, 8> names{"clear", "medium", "dark", "path",
                                                    "floor", "arrows", "walls", "ceiling"};
    return names[static_cast<std::size_t>(e)];
}

inline std::optional<ElementKind> parse_element(std::string_view s) noexcept {
    for (auto e : kAllElements)
        if (to_string(e) == s) return e;
    return std::nullopt;
}

/// Object material grey (83 / 111 / 134) to the element column describing it.
inline ElementKind element_for_object_grey(int grey) {
    switch (grey) {
        case 134: return ElementKind::clear;
        case 111: return ElementKind::medium;
        case 83: return ElementKind::dark;
        default: throw DomainError("object grey must be 83, 111 or 134, got " + std::to_string(grey));
    }
}

namespace tables {

inline constexpr std::array<int, 6> kAmbient{23, 33, 55, 85, 128, 175};

inline constexpr std::array<int, 8> kMaterialGrey{134, 111, 83, 101, 79, 83, 155, 176};

// rows: L1..L6, columns: ElementKind order
inline constexpr std::array<std::array<int, 8>, 6> kRenderedGrey{{
    {6, 2, 0, 2, 0, 1, 5, 1},
    {10, 7, 2, 6, 1, 3, 10, 5},
    {21, 16, 9, 15, 8, 11, 20, 13},
    {36, 28, 19, 26, 17, 21, 34, 24},
    {58, 47, 33, 44, 31, 35, 56, 39},
    {83, 67, 49, 63, 45, 52, 81, 58},
}};

// cd/m^2
inline constexpr std::array<std::array<double, 8>, 6> kLuminance{{
    {0.438, 0.216, 0.105, 0.216, 0.105, 0.160, 0.382, 0.160},
    {0.660, 0.493, 0.216, 0.438, 0.160, 0.271, 0.660, 0.382},
    {1.27, 0.998, 0.604, 0.937, 0.549, 0.715, 1.21, 0.826},
    {3.17, 1.66, 1.16, 1.55, 1.05, 1.27, 2.63, 1.44},
    {9.11, 6.14, 2.36, 5.33, 1.82, 2.90, 8.57, 3.98},
    {13.7, 11.1, 6.68, 10.5, 5.60, 7.49, 13.3, 9.67},
}};

}  // namespace tables

inline int ambient_intensity(LightLevel level) { return tables::kAmbient[static_cast<std::size_t>(level.value() - 1)]; }

inline int material_grey(ElementKind e) noexcept { return tables::kMaterialGrey[static_cast<std::size_t>(e)]; }

inline int rendered_grey(ElementKind e, LightLevel level) {
    return tables::kRenderedGrey[static_cast<std::size_t>(level.value() - 1)][static_cast<std::size_t>(e)];
}

inline double estimated_luminance(ElementKind e, LightLevel level) {
    return tables::kLuminance[static_cast<std::size_t>(level.value() - 1)][static_cast<std::size_t>(e)];
}

/// Display luminance of a destructible object (material grey 83/111/134) under a lighting level.
inline double object_luminance(int object_grey, LightLevel level) {
    return estimated_luminance(element_for_object_grey(object_grey), level);
}

struct CalibrationAnchor {
    int grey = 0;
    double luminance = 0.0;
    friend bool operator==(const CalibrationAnchor&, const CalibrationAnchor&) = default;
};

/// Piecewise-linear grey -> luminance map over strictly increasing anchors.
class CalibrationCurve {
public:
    explicit CalibrationCurve(std::vector<CalibrationAnchor> anchors) : anchors_(std::move(anchors)) {
        if (anchors_.size() < 2) throw DomainError("calibration curve needs at least two anchors");
        for (std::size_t i = 0; i < anchors_.size(); ++i) {
            const auto& a = anchors_[i];
            if (a.grey < 0 || a.grey > 255) throw DomainError("anchor grey outside 0..255");
            if (!std::isfinite(a.luminance) || a.luminance < 0.0) throw DomainError("anchor luminance must be finite and >= 0");
            if (i > 0 && !(a.grey > anchors_[i - 1].grey && a.luminance > anchors_[i - 1].luminance))
                throw DomainError("calibration anchors must be strictly increasing in grey and luminance");
        }
    }

    const std::vector<CalibrationAnchor>& anchors() const noexcept { return anchors_; }
    int min_grey() const noexcept { return anchors_.front().grey; }
    int max_grey() const noexcept { return anchors_.back().grey; }

    double operator()(double grey) const {
        if (!(grey >= min_grey() && grey <= max_grey()))
            throw DomainError("grey " + std::to_string(grey) + " outside calibration span [" +
                              std::to_string(min_grey()) + ", " + std::to_string(max_grey()) + "]; refusing to extrapolate");
        auto hi = std::lower_bound(anchors_.begin(), anchors_.end(), grey,
                                   [](const CalibrationAnchor& a, double g) { return a.grey < g; });
        if (hi->grey == grey) return hi->luminance;
        auto lo = std::prev(hi);
        const double r = (grey - lo->grey) / static_cast<double>(hi->grey - lo->grey);
        return lo->luminance + r * (hi->luminance - lo->luminance);
    }

private:
    std::vector<CalibrationAnchor> anchors_;
};

/// (rendered grey, luminance) pairs harvested from the embedded tables, one per grey.
/// Grey 58 appears twice (clear at L5 -> 9.11, ceiling at L6 -> 9.67); the first
/// occurrence in level-major, element-minor order is kept, which is also the value
/// that lies on the line through its neighbours.
inline std::vector<CalibrationAnchor> builtin_anchor_pairs() {
    std::vector<CalibrationAnchor> out;
    for (std::size_t l = 0; l < 6; ++l) {
        for (std::size_t e = 0; e < 8; ++e) {
            const int g = tables::kRenderedGrey[l][e];
            const bool seen = std::any_of(out.begin(), out.end(), [g](const auto& a) { return a.grey == g; });
            if (!seen) out.push_back({g, tables::kLuminance[l][e]});
        }
    }
    std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.grey < b.grey; });
    return out;
}

inline const CalibrationCurve& builtin_curve() {
    static const CalibrationCurve curve{builtin_anchor_pairs()};
    return curve;
}

inline double luminance_from_grey(double grey, const CalibrationCurve& curve) { return curve(grey); }

inline double luminance_from_grey(double grey) { return builtin_curve()(grey); }

/// Reads `grey,luminance` rows (comma, semicolon, tab or space separated). Lines starting
/// with '#' and a non-numeric header line are skipped.
inline CalibrationCurve load_anchor_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open anchor file " + path.string());
    std::vector<CalibrationAnchor> anchors;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.find_first_not_of(" \t") == std::string::npos || line[line.find_first_not_of(" \t")] == '#') continue;
        for (char& c : line)
            if (c == ',' || c == ';' || c == '\t') c = ' ';
        std::istringstream fields(line);
        double g = 0.0, lum = 0.0;
        if (!(fields >> g >> lum)) {
            if (anchors.empty() && lineno == 1) continue;  // header
            throw ParseError(path, lineno, "expected 'grey,luminance'");
        }
        if (g != std::floor(g)) throw ParseError(path, lineno, "grey must be an integer");
        anchors.push_back({static_cast<int>(g), lum});
    }
    try {
        return CalibrationCurve(std::move(anchors));
    } catch (const DomainError& e) {
        throw ParseError(path, 0, e.what());
    }
}

}  // namespace vrsom::photometry
