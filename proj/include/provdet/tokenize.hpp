#pragma once

#include <cctype>
#include <string>
#include <string_view>
#include <vector>

namespace provdet {

// Lowercases and splits attribute text on path separators, dots, whitespace,
// colons and pipes. Empty tokens are dropped, so "" yields an empty sequence.
inline std::vector<std::string> tokenize_attribute(std::string_view text) {
    std::vector<std::string> tokens;
    std::string current;
    auto flush = [&] {
        if (!current.empty()) {
            tokens.push_back(current);
            current.clear();
        }
    };
    for (char c : text) {
        switch (c) {
            case '/':
            case '\\':
            case '.':
            case ':':
            case '|':
            case ' ':
            case '\t':
            case '\n':
            case '\r':
                flush();
                break;
            default:
                current += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
        }
    }
    flush();
    return tokens;
}

}  // namespace provdet
