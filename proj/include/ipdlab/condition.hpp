#pragma once

#include <array>
#include <stdexcept>
#include <string>

namespace ipdlab {

enum class ContextFrame { Neutral, Biz, Environment, Social, Team, IR };
enum class PromptRegime { Standard, Variant, Robust };
enum class Treatment { NoMessaging, FullMessage, OneWord };
enum class GameMode { Dyadic, Network };

inline constexpr std::array<ContextFrame, 6> kAllFrames = {
    ContextFrame::Neutral, ContextFrame::Biz,  ContextFrame::Environment,
    ContextFrame::Social,  ContextFrame::Team, ContextFrame::IR};
inline constexpr std::array<PromptRegime, 3> kAllRegimes = {
    PromptRegime::Standard, PromptRegime::Variant, PromptRegime::Robust};
inline constexpr std::array<Treatment, 3> kAllTreatments = {
    Treatment::NoMessaging, Treatment::FullMessage, Treatment::OneWord};

inline std::string frame_name(ContextFrame f) {
    switch (f) {
        case ContextFrame::Neutral: return "neutral";
        case ContextFrame::Biz: return "biz";
        case ContextFrame::Environment: return "environment";
        case ContextFrame::Social: return "social";
        case ContextFrame::Team: return "team";
        case ContextFrame::IR: return "IR";
    }
    return "neutral";
}

inline ContextFrame frame_from(const std::string& s) {
    for (auto f : kAllFrames)
        if (frame_name(f) == s) return f;
    throw std::invalid_argument("unknown context frame: " + s);
}

inline std::string regime_name(PromptRegime r) {
    switch (r) {
        case PromptRegime::Standard: return "standard";
        case PromptRegime::Variant: return "variant";
        case PromptRegime::Robust: return "robust";
    }
    return "standard";
}

inline PromptRegime regime_from(const std::string& s) {
    for (auto r : kAllRegimes)
        if (regime_name(r) == s) return r;
    throw std::invalid_argument("unknown prompt regime: " + s);
}

inline std::string treatment_name(Treatment t) {
    switch (t) {
        case Treatment::NoMessaging: return "no_messaging";
        case Treatment::FullMessage: return "full_message";
        case Treatment::OneWord: return "one_word";
    }
    return "no_messaging";
}

inline Treatment treatment_from(const std::string& s) {
    for (auto t : kAllTreatments)
        if (treatment_name(t) == s) return t;
    throw std::invalid_argument("unknown treatment: " + s);
}

inline bool is_messaging(Treatment t) { return t != Treatment::NoMessaging; }

}  // namespace ipdlab
