#pragma once

#include <cmath>

namespace photonpano {

// Standard sRGB transfer function on [0, 1]-scaled code values.
inline double srgb_to_linear(double code) {
    return code <= 0.04045 ? code / 12.92 : std::pow((code + 0.055) / 1.055, 2.4);
}

inline double linear_to_srgb(double linear) {
    if (linear <= 0.0) return 0.0;
    if (linear >= 1.0) return 1.0;
    return linear <= 0.0031308 ? 12.92 * linear : 1.055 * std::pow(linear, 1.0 / 2.4) - 0.055;
}

// Rec. 709 luminance weights, applied to linearized channels.
inline constexpr double kLumaR = 0.2126;
inline constexpr double kLumaG = 0.7152;
inline constexpr double kLumaB = 0.0722;

}  // namespace photonpano
