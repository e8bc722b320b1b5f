// SPDX-License-Identifier: Apache-2.0
#include "emofuse/labels.hpp"

#include "emofuse/error.hpp"

namespace emofuse {

std::vector<std::string> emotion_vocabulary() { return {kEmotionLabels.begin(), kEmotionLabels.end()}; }
std::vector<std::string> gender_vocabulary() { return {kGenderLabels.begin(), kGenderLabels.end()}; }

int vocabulary_index(const std::vector<std::string>& vocab, std::string_view label) {
  for (std::size_t i = 0; i < vocab.size(); ++i) {
    if (vocab[i] == label) return static_cast<int>(i);
  }
  return -1;
}

int emotion_index(std::string_view label) {
  for (std::size_t i = 0; i < kEmotionLabels.size(); ++i) {
    if (kEmotionLabels[i] == label) return static_cast<int>(i);
  }
  throw InvalidArgument("unknown emotion label '" + std::string(label) + "'");
}

int gender_index(std::string_view label) {
  for (std::size_t i = 0; i < kGenderLabels.size(); ++i) {
    if (kGenderLabels[i] == label) return static_cast<int>(i);
  }
  throw InvalidArgument("unknown gender label '" + std::string(label) + "'");
}

}  // namespace emofuse
