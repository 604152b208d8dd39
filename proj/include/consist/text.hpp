#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace consist::text {

// Characters stripped before word matching: .,!?;:"()'
bool is_stripped_punct(char c);

std::string lower(std::string_view s);

// Lowercases and removes stripped punctuation. May return "".
std::string normalize_word(std::string_view raw);

// Splits on whitespace, normalizes each token, drops empties.
std::vector<std::string> words(std::string_view raw);

std::string join(const std::vector<std::string>& ws, std::string_view sep = " ");

// True for a non-empty token with no whitespace and no uppercase letters.
bool is_lower_word(std::string_view s);

}  // namespace consist::text
