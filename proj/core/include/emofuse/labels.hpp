// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <string>
#include <string_view>
#include <vector>

namespace emofuse {

inline constexpr int kEmotionCount = 8;

/// Frozen alphabetical emotion order shared by every score file.
inline constexpr std::array<std::string_view, kEmotionCount> kEmotionLabels{
    "angry", "anxious", "disgust", "happy", "neutral", "sad", "surprise", "worried"};

inline constexpr std::array<std::string_view, 2> kGenderLabels{"female", "male"};

std::vector<std::string> emotion_vocabulary();
std::vector<std::string> gender_vocabulary();

/// Index of `label` in `vocab`, or -1.
int vocabulary_index(const std::vector<std::string>& vocab, std::string_view label);

/// Throws InvalidArgument naming the label when it is not in the emotion set.
int emotion_index(std::string_view label);
int gender_index(std::string_view label);

}  // namespace emofuse
