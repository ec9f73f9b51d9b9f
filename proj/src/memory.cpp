#include "tilefuse/memory.hpp"

#include <sstream>
#include <stdexcept>

namespace tilefuse {

const char* buffer_class_name(BufferClass c) {
    switch (c) {
        case BufferClass::Tile: return "tile";
        case BufferClass::Patch: return "patch";
        case BufferClass::Pending: return "pending";
        default: return "?";
    }
}

void MemoryAccounting::add(BufferClass c, size_t bytes) {
    std::lock_guard<std::mutex> lock(mu_);
    const int i = static_cast<int>(c);
    current_[i] += bytes;
    total_current_ += bytes;
    if (current_[i] > peak_[i]) peak_[i] = current_[i];
    if (total_current_ > total_peak_) total_peak_ = total_current_;
}

void MemoryAccounting::sub(BufferClass c, size_t bytes) {
    std::lock_guard<std::mutex> lock(mu_);
    const int i = static_cast<int>(c);
    if (bytes > current_[i])
        throw std::logic_error("memory accounting underflow for class " +
                               std::string(buffer_class_name(c)));
    current_[i] -= bytes;
    total_current_ -= bytes;
}

size_t MemoryAccounting::current_bytes() const {
    std::lock_guard<std::mutex> lock(mu_);
    return total_current_;
}

size_t MemoryAccounting::peak_bytes() const {
    std::lock_guard<std::mutex> lock(mu_);
    return total_peak_;
}

size_t MemoryAccounting::class_peak(BufferClass c) const {
    std::lock_guard<std::mutex> lock(mu_);
    return peak_[static_cast<int>(c)];
}

size_t MemoryAccounting::class_current(BufferClass c) const {
    std::lock_guard<std::mutex> lock(mu_);
    return current_[static_cast<int>(c)];
}

void MemoryAccounting::reset() {
    std::lock_guard<std::mutex> lock(mu_);
    current_.fill(0);
    peak_.fill(0);
    total_current_ = 0;
    total_peak_ = 0;
}

std::string MemoryAccounting::report() const {
    std::lock_guard<std::mutex> lock(mu_);
    std::ostringstream os;
    os << "peak_bytes = " << total_peak_ << "\n";
    for (int i = 0; i < kClasses; ++i)
        os << "peak_" << buffer_class_name(static_cast<BufferClass>(i))
           << " = " << peak_[i] << "\n";
    return os.str();
}

}  // namespace tilefuse
