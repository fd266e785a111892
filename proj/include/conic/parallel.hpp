#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace conic {

inline unsigned default_workers() noexcept
{
    return std::max(1u, std::thread::hardware_concurrency());
}

/// Calls fn(i) for i in [0, count) on up to `workers` threads. Work items
/// must write only to their own slots; the caller reduces afterwards in
/// index order, which keeps results independent of the worker count.
/// The exception of the lowest failing index is rethrown.
template <class Fn>
void parallel_for(std::size_t count, unsigned workers, Fn&& fn)
{
    if (workers <= 1 || count <= 1)
    {
        for (std::size_t i = 0; i < count; ++i)
            fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::mutex error_mutex;
    std::exception_ptr error;
    std::size_t error_index = count;
    auto body = [&] {
        for (std::size_t i = next++; i < count; i = next++)
        {
            try
            {
                fn(i);
            }
            catch (...)
            {
                std::lock_guard lock(error_mutex);
                if (i < error_index)
                {
                    error_index = i;
                    error = std::current_exception();
                }
            }
        }
    };
    {
        std::vector<std::jthread> threads;
        const auto n = std::min<std::size_t>(workers, count);
        threads.reserve(n - 1);
        for (std::size_t t = 1; t < n; ++t)
            threads.emplace_back(body);
        body();
    }
    if (error)
        std::rethrow_exception(error);
}

}  // namespace conic
