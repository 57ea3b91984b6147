#pragma once

#include <array>
#include <cstdint>
#include <string>

#include "fervit/errors.hpp"

namespace fervit {

// Canonical 7-emotion label set. The order is fixed; every dataset adapter
// remaps its native coding into these ids. Contempt is not representable here.
enum class Emotion : std::uint8_t {
    neutral = 0,
    happy = 1,
    sad = 2,
    surprise = 3,
    fear = 4,
    disgust = 5,
    anger = 6,
};

inline constexpr std::size_t kNumEmotions = 7;

inline constexpr std::array<const char*, kNumEmotions> kEmotionNames = {
    "neutral", "happy", "sad", "surprise", "fear", "disgust", "anger",
};

inline const char* emotion_name(Emotion e) { return kEmotionNames[static_cast<std::size_t>(e)]; }

inline Emotion emotion_from_id(int id) {
    if (id < 0 || id >= static_cast<int>(kNumEmotions))
        raise(Errc::unknown_label, "emotion id out of range: " + std::to_string(id));
    return static_cast<Emotion>(id);
}

Emotion emotion_from_name(const std::string& name);

enum class Source : std::uint8_t {
    affectnet = 0,
    jaffe = 1,
    ckplus = 2,
    fer2013 = 3,
    synthetic = 4,
};

const char* source_name(Source s);
Source source_from_name(const std::string& name);

} // namespace fervit
