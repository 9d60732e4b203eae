#include "ddcp/dataset.hpp"

#include <atomic>
#include <fstream>
#include <functional>
#include <numeric>
#include <thread>

#include "binio.hpp"
#include "ddcp/errors.hpp"

namespace ddcp {

namespace {

void parallel_for(std::size_t count, int threads, const std::function<void(std::size_t)>& body) {
    const int workers = std::max(1, threads);
    if (workers == 1 || count < 2) {
        for (std::size_t i = 0; i < count; ++i) body(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(workers));
    for (int w = 0; w < workers; ++w)
        pool.emplace_back([&] {
            for (std::size_t i = next.fetch_add(1); i < count; i = next.fetch_add(1)) body(i);
        });
    for (auto& t : pool) t.join();
}

std::vector<float> sample_payload(const DatasetSample& s, const GridConfig& grid) {
    std::vector<float> buf;
    buf.reserve(grid.e_dim + grid.f * grid.feature_dim());
    for (double x : s.e) buf.push_back(static_cast<float>(x));
    for (const auto& frame : s.frames.frames) {
        for (const cplx& h : frame) buf.push_back(static_cast<float>(h.real()));
        for (const cplx& h : frame) buf.push_back(static_cast<float>(h.imag()));
    }
    return buf;
}

}  // namespace

DatasetSample generate_sample(const GridConfig& grid, std::uint64_t base_seed, std::size_t index,
                              const GenOptions& opt) {
    CounterRng stream = CounterRng(base_seed).derive(index);
    CounterRng scen_stream = stream.derive(stream_salt::kScenario);
    DatasetSample s;
    s.params = sample_scenario(scen_stream, opt.ranges);
    s.e = encode_conditioning(s.params);
    s.frames = generate_frame_sequence(s.params, grid, stream, opt.pdp_decay);
    return s;
}

Dataset build_dataset(const GridConfig& grid, std::size_t count, std::uint64_t base_seed,
                      const GenOptions& opt) {
    grid.validate();
    opt.ranges.validate();
    if (count < 1) throw UsageError("build_dataset: count must be at least 1");
    if (static_cast<std::size_t>(opt.ranges.horizon.second) > grid.f - 1)
        throw UsageError("build_dataset: horizon range exceeds frames per sample (F-1)");

    Dataset d;
    d.grid = grid;
    d.base_seed = base_seed;
    d.samples.resize(count);
    parallel_for(count, opt.threads,
                 [&](std::size_t i) { d.samples[i] = generate_sample(grid, base_seed, i, opt); });
    return d;
}

std::pair<Dataset, Dataset> split_dataset(const Dataset& d, std::size_t train_count,
                                          std::uint64_t seed) {
    if (train_count == 0 || train_count >= d.count())
        throw UsageError("split_dataset: train_count must lie strictly between 0 and count");

    std::vector<std::size_t> perm(d.count());
    std::iota(perm.begin(), perm.end(), 0);
    CounterRng stream = CounterRng(seed).derive(stream_salt::kSplit);
    for (std::size_t i = perm.size(); i > 1; --i)
        std::swap(perm[i - 1], perm[stream.next_below(i)]);

    Dataset train, test;
    train.grid = test.grid = d.grid;
    train.base_seed = test.base_seed = d.base_seed;
    train.samples.reserve(train_count);
    test.samples.reserve(d.count() - train_count);
    for (std::size_t i = 0; i < perm.size(); ++i)
        (i < train_count ? train : test).samples.push_back(d.samples[perm[i]]);
    return {std::move(train), std::move(test)};
}

void save_ddcp(const Dataset& d, const std::string& path) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw FormatError("cannot open for writing: " + path);

    binio::write_bytes(os, "DDCP", 4);
    binio::write_u32(os, 1);
    binio::write_u32(os, static_cast<std::uint32_t>(d.grid.m));
    binio::write_u32(os, static_cast<std::uint32_t>(d.grid.n));
    binio::write_u32(os, static_cast<std::uint32_t>(d.grid.l));
    binio::write_u32(os, static_cast<std::uint32_t>(d.grid.f));
    binio::write_u32(os, static_cast<std::uint32_t>(d.grid.e_dim));
    binio::write_u32(os, static_cast<std::uint32_t>(d.count()));
    binio::write_u64(os, d.base_seed);
    for (const auto& s : d.samples) binio::write_f32_block(os, sample_payload(s, d.grid));
    os.flush();
    if (!os) throw FormatError("write failure: " + path);
}

Dataset load_ddcp(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw FormatError("cannot open: " + path);

    binio::check_magic(is, "DDCP", "DDCP");
    if (binio::read_u32(is, "version") != 1) throw FormatError("unsupported DDCP version");

    Dataset d;
    d.grid.m = binio::read_u32(is, "M");
    d.grid.n = binio::read_u32(is, "N");
    d.grid.l = binio::read_u32(is, "L");
    d.grid.f = binio::read_u32(is, "F");
    d.grid.e_dim = binio::read_u32(is, "E_dim");
    const std::uint32_t count = binio::read_u32(is, "sample_count");
    d.base_seed = binio::read_u64(is, "base_seed");
    try {
        d.grid.validate();
    } catch (const UsageError& e) {
        throw FormatError(std::string("invalid DDCP header: ") + e.what());
    }

    const std::size_t d_cplx = d.grid.d();
    std::vector<float> e_buf(d.grid.e_dim);
    std::vector<float> frame_buf(2 * d_cplx);
    d.samples.resize(count);
    for (auto& s : d.samples) {
        binio::read_f32_block(is, e_buf, "conditioning vector");
        s.e.assign(e_buf.begin(), e_buf.end());
        s.params = decode_conditioning(s.e);
        s.frames.doppler_hz = derive_doppler(s.params.speed_mps, s.params.carrier_hz);
        s.frames.sample_period_s = 1.0 / s.params.bandwidth_hz;
        s.frames.frames.assign(d.grid.f, std::vector<cplx>(d_cplx));
        for (auto& frame : s.frames.frames) {
            binio::read_f32_block(is, frame_buf, "frame");
            for (std::size_t k = 0; k < d_cplx; ++k)
                frame[k] = {static_cast<double>(frame_buf[k]),
                            static_cast<double>(frame_buf[d_cplx + k])};
        }
    }
    if (is.peek() != std::char_traits<char>::eof())
        throw FormatError("trailing bytes after last sample: " + path);
    return d;
}

void verify_ddcp(const std::string& path, const GenOptions& opt) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw FormatError("cannot open: " + path);

    binio::check_magic(is, "DDCP", "DDCP");
    if (binio::read_u32(is, "version") != 1) throw FormatError("unsupported DDCP version");
    GridConfig grid;
    grid.m = binio::read_u32(is, "M");
    grid.n = binio::read_u32(is, "N");
    grid.l = binio::read_u32(is, "L");
    grid.f = binio::read_u32(is, "F");
    grid.e_dim = binio::read_u32(is, "E_dim");
    const std::uint32_t count = binio::read_u32(is, "sample_count");
    const std::uint64_t base_seed = binio::read_u64(is, "base_seed");
    if (count == 0) throw FormatError("empty DDCP file");

    const std::size_t header = 4 + 4 + 5 * 4 + 4 + 8;
    const std::size_t per_sample = 4 * (grid.e_dim + grid.f * grid.feature_dim());
    is.seekg(0, std::ios::end);
    const auto actual = static_cast<std::size_t>(is.tellg());
    if (actual != header + per_sample * count)
        throw FormatError("DDCP payload size mismatch: " + path);

    auto check_sample = [&](std::size_t index) {
        std::vector<float> on_disk(per_sample / 4);
        is.seekg(static_cast<std::streamoff>(header + per_sample * index));
        binio::read_f32_block(is, on_disk, "sample payload");
        const std::vector<float> regen =
            sample_payload(generate_sample(grid, base_seed, index, opt), grid);
        if (on_disk != regen)
            throw FormatError("sample " + std::to_string(index) +
                              " does not match regeneration: " + path);
    };
    check_sample(0);
    if (count > 1) check_sample(count - 1);
}

}  // namespace ddcp
