#include "hl2ss/bytes.hpp"

#include <string>

#include "hl2ss/errors.hpp"

namespace hl2ss {

void ByteReader::require(std::size_t n) const {
    if (remaining() < n) {
        throw TruncatedError("need " + std::to_string(n) + " bytes at offset " +
                             std::to_string(pos_) + ", have " + std::to_string(remaining()));
    }
}

std::uint8_t ByteReader::u8() {
    require(1);
    return data_[pos_++];
}

ByteView ByteReader::bytes(std::size_t n) {
    require(n);
    auto out = data_.subspan(pos_, n);
    pos_ += n;
    return out;
}

}  // namespace hl2ss
