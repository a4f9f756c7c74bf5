#include "marg/tokens.hpp"

namespace marg {

namespace {

constexpr int kWordHeadChars = 12;  // letters covered by the first token
constexpr int kWordStepChars = 7;   // letters per additional token
constexpr int kDigitGroup = 3;

inline bool is_space(unsigned char c) {
    return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}
inline bool is_letter(unsigned char c) {
    return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z');
}
inline bool is_digit(unsigned char c) { return c >= '0' && c <= '9'; }

}  // namespace

int count_tokens(std::string_view text) {
    int total = 0;
    size_t i = 0;
    const size_t n = text.size();
    while (i < n) {
        const unsigned char c = static_cast<unsigned char>(text[i]);
        if (is_space(c)) {
            while (i < n && is_space(static_cast<unsigned char>(text[i]))) ++i;
        } else if (is_letter(c)) {
            size_t j = i;
            while (j < n && is_letter(static_cast<unsigned char>(text[j]))) ++j;
            const int len = static_cast<int>(j - i);
            int t = 1;
            if (len > kWordHeadChars) {
                t += (len - kWordHeadChars + kWordStepChars - 1) / kWordStepChars;
            }
            total += t;
            i = j;
        } else if (is_digit(c)) {
            size_t j = i;
            while (j < n && is_digit(static_cast<unsigned char>(text[j]))) ++j;
            const int len = static_cast<int>(j - i);
            total += (len + kDigitGroup - 1) / kDigitGroup;
            i = j;
        } else {
            total += 1;
            ++i;
        }
    }
    return total;
}

}  // namespace marg
