#pragma once

#include <array>
#include <atomic>
#include <cstddef>
#include <mutex>
#include <string>

namespace tilefuse {

/// Buffer classes the streaming engine accounts for. Only engine-owned pixel
/// buffers are tracked; fixed-size metadata (schedules, origin vectors,
/// coefficient tiles) is reported separately by its owner.
enum class BufferClass : int {
    Tile = 0,      // in-core tiles of the accumulation canvas
    Patch = 1,     // per-patch latents, conditions, noise, model output
    Pending = 2,   // contributions parked by the deterministic reducer
    kCount = 3,
};

const char* buffer_class_name(BufferClass c);

/// Thread-safe current/peak byte counter, per class and overall. The peak is
/// monotone within a run; reset() starts a new measurement window.
class MemoryAccounting {
public:
    void add(BufferClass c, size_t bytes);
    void sub(BufferClass c, size_t bytes);

    size_t current_bytes() const;
    size_t peak_bytes() const;
    size_t class_peak(BufferClass c) const;
    size_t class_current(BufferClass c) const;

    void reset();

    std::string report() const;

private:
    static constexpr int kClasses = static_cast<int>(BufferClass::kCount);
    mutable std::mutex mu_;
    std::array<size_t, kClasses> current_{};
    std::array<size_t, kClasses> peak_{};
    size_t total_current_ = 0;
    size_t total_peak_ = 0;
};

/// RAII registration of one buffer with an accounting sink. A null sink is
/// allowed and makes the lease a no-op, so call sites need no branching.
class MemLease {
public:
    MemLease() = default;
    MemLease(MemoryAccounting* sink, BufferClass c, size_t bytes)
        : sink_(sink), class_(c), bytes_(bytes) {
        if (sink_) sink_->add(class_, bytes_);
    }
    MemLease(MemLease&& other) noexcept { swap(other); }
    MemLease& operator=(MemLease&& other) noexcept {
        release();
        swap(other);
        return *this;
    }
    MemLease(const MemLease&) = delete;
    MemLease& operator=(const MemLease&) = delete;
    ~MemLease() { release(); }

    void release() {
        if (sink_) sink_->sub(class_, bytes_);
        sink_ = nullptr;
        bytes_ = 0;
    }

private:
    void swap(MemLease& other) {
        std::swap(sink_, other.sink_);
        std::swap(class_, other.class_);
        std::swap(bytes_, other.bytes_);
    }

    MemoryAccounting* sink_ = nullptr;
    BufferClass class_ = BufferClass::Tile;
    size_t bytes_ = 0;
};

}  // namespace tilefuse
