#pragma once

#include <functional>
#include <iostream>
#include <mutex>
#include <string>
#include <string_view>

namespace facematch {

enum class LogLevel { info, warning };

using LogSink = std::function<void(LogLevel, std::string_view)>;

namespace detail {
inline LogSink& sink_storage()
{
    static LogSink sink = [](LogLevel level, std::string_view msg) {
        if (level == LogLevel::warning) {
            std::cerr << "warning: " << msg << '\n';
        }
    };
    return sink;
}

inline std::mutex& sink_mutex()
{
    static std::mutex m;
    return m;
}
} // namespace detail

/// Replaces the global sink and returns the previous one.
inline LogSink set_log_sink(LogSink sink)
{
    std::lock_guard lock(detail::sink_mutex());
    auto previous = std::move(detail::sink_storage());
    detail::sink_storage() = std::move(sink);
    return previous;
}

inline void log_info(std::string_view msg)
{
    std::lock_guard lock(detail::sink_mutex());
    if (auto& s = detail::sink_storage()) {
        s(LogLevel::info, msg);
    }
}

inline void log_warning(std::string_view msg)
{
    std::lock_guard lock(detail::sink_mutex());
    if (auto& s = detail::sink_storage()) {
        s(LogLevel::warning, msg);
    }
}

/// Installs a sink for the lifetime of the guard.
class ScopedLogSink
{
public:
    explicit ScopedLogSink(LogSink sink) : previous_(set_log_sink(std::move(sink))) {}
    ~ScopedLogSink() { set_log_sink(std::move(previous_)); }
    ScopedLogSink(const ScopedLogSink&) = delete;
    ScopedLogSink& operator=(const ScopedLogSink&) = delete;

private:
    LogSink previous_;
};

} // namespace facematch
