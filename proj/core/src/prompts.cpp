#include "storsim/prompts.hpp"

namespace storsim::prompts {

std::string substitute(std::string text, const std::string& key,
                       const std::string& value) {
  std::size_t pos = 0;
  while ((pos = text.find(key, pos)) != std::string::npos) {
    text.replace(pos, key.size(), value);
    pos += value.size();
  }
  return text;
}

}  // namespace storsim::prompts
