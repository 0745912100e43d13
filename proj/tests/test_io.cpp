#include <doctest.h>

#include <bit>
#include <cstring>

#include "satlab/error.hpp"
#include "satlab/io/architecture.hpp"
#include "satlab/io/config.hpp"
#include "satlab/io/dump.hpp"
#include "satlab/io/report.hpp"
#include "satlab/random.hpp"
#include "tmpdir.hpp"

using namespace satlab;
using namespace satlab::io;

namespace {

template <typename F>
ErrorKind kind_of(F&& f) {
    try {
        f();
    } catch (const Error& e) {
        return e.kind();
    }
    FAIL("expected an error");
    return ErrorKind::InvalidConfig;
}

bool bitwise_equal(const std::vector<float>& a, const std::vector<float>& b) {
    return a.size() == b.size() && std::memcmp(a.data(), b.data(), a.size() * sizeof(float)) == 0;
}

float random_float(Rng& rng) {
    // Mostly ordinary values, sometimes raw bit patterns (subnormals, -0, NaN payloads).
    if (rng.bernoulli(0.2)) return std::bit_cast<float>(static_cast<std::uint32_t>(rng.index(0x100000000ull)));
    return static_cast<float>(rng.normal() * 10.0);
}

}  // namespace

TEST_CASE("dump: 1x1 value has the documented byte count") {
    TempDir dir;
    const ActivationDumpHeader h{"fc", {1, 1}, kDtypeFloat32};
    const std::vector<float> v = {0.5f};
    write_dump(dir / "a.satd", h, v);
    const auto bytes = file_bytes(dir / "a.satd");
    // magic, version, name_len, name, ndim, two u32 dims, dtype, one f32
    CHECK(bytes.size() == 4 + 2 + 2 + 2 + 1 + 8 + 1 + 4);
    CHECK(h.header_bytes() + 4 == bytes.size());
    const auto back = read_dump(dir / "a.satd");
    CHECK(back.header.layer_name == "fc");
    CHECK(back.header.dims == std::vector<std::uint32_t>{1, 1});
    CHECK(back.values == v);
}

TEST_CASE("dump: golden fixtures are byte-exact") {
    const std::vector<float> fc = {0.5f, -2.0f};
    const auto fc_bytes = encode_dump({"fc", {1, 2}, kDtypeFloat32}, fc);
    CHECK(fc_bytes == file_bytes(SATLAB_FIXTURE_DIR "/golden_fc.satd"));

    std::vector<float> conv(24);
    for (std::size_t i = 0; i < conv.size(); ++i) conv[i] = static_cast<float>(i) * 0.25f - 1.0f;
    CHECK(encode_dump({"conv1", {2, 3, 2, 2}, kDtypeFloat32}, conv) ==
          file_bytes(SATLAB_FIXTURE_DIR "/golden_conv.satd"));

    const auto read = read_dump(SATLAB_FIXTURE_DIR "/golden_conv.satd");
    CHECK(read.header.dims == std::vector<std::uint32_t>{2, 3, 2, 2});
    CHECK(bitwise_equal(read.values, conv));
    const Tensor t = read.to_tensor();
    CHECK(t.shape() == std::vector<std::size_t>{2, 3, 2, 2});
    CHECK(t[5] == 0.25);
}

TEST_CASE("dump: 200 random round-trips are bitwise identical") {
    TempDir dir;
    Rng rng(606);
    for (int i = 0; i < 200; ++i) {
        ActivationDumpHeader h;
        h.layer_name = "layer_" + std::to_string(i) + std::string(rng.index(40), 'x');
        if (rng.bernoulli(0.5)) {
            h.dims = {static_cast<std::uint32_t>(1 + rng.index(20)), static_cast<std::uint32_t>(1 + rng.index(30))};
        } else {
            h.dims = {static_cast<std::uint32_t>(1 + rng.index(5)), static_cast<std::uint32_t>(1 + rng.index(6)),
                      static_cast<std::uint32_t>(1 + rng.index(7)), static_cast<std::uint32_t>(1 + rng.index(7))};
        }
        std::vector<float> v(h.element_count());
        for (auto& x : v) x = random_float(rng);
        const auto path = dir / ("d" + std::to_string(i) + ".satd");
        write_dump(path, h, v);
        const auto back = read_dump(path);
        CHECK(back.header.layer_name == h.layer_name);
        CHECK(back.header.dims == h.dims);
        CHECK(bitwise_equal(back.values, v));
        CHECK(file_bytes(path) == encode_dump(h, v));
    }
}

TEST_CASE("dump: streaming reader hands out whole samples once") {
    TempDir dir;
    Tensor t({7, 2, 3, 3});
    Rng rng(3);
    for (auto& v : t.values()) v = static_cast<float>(rng.normal());
    write_dump(dir / "s.satd", "conv", t);

    DumpReader reader(dir / "s.satd");
    CHECK(reader.samples_remaining() == 7);
    std::vector<double> seen;
    std::size_t chunks = 0;
    for (Tensor c = reader.next(3); c.samples() > 0; c = reader.next(3)) {
        CHECK(c.shape()[1] == 2);
        seen.insert(seen.end(), c.values().begin(), c.values().end());
        ++chunks;
    }
    CHECK(chunks == 3);
    CHECK(seen == std::vector<double>(t.values().begin(), t.values().end()));
}

TEST_CASE("dump: malformed files") {
    TempDir dir;
    const std::vector<float> v = {1.0f, 2.0f, 3.0f, 4.0f};
    const ActivationDumpHeader h{"x", {2, 2}, kDtypeFloat32};
    auto bytes = encode_dump(h, v);

    auto write_bytes = [&](const std::string& name, const std::vector<std::uint8_t>& b) {
        std::ofstream out(dir / name, std::ios::binary);
        out.write(reinterpret_cast<const char*>(b.data()), static_cast<std::streamsize>(b.size()));
        return dir / name;
    };

    auto cut = bytes;
    cut.pop_back();
    CHECK(kind_of([&] { read_dump(write_bytes("cut.satd", cut)); }) == ErrorKind::TruncatedPayload);

    auto magic = bytes;
    magic[0] = 'X';
    CHECK(kind_of([&] { read_dump(write_bytes("magic.satd", magic)); }) == ErrorKind::BadMagic);

    auto version = bytes;
    version[4] = 2;
    CHECK(kind_of([&] { read_dump(write_bytes("version.satd", version)); }) == ErrorKind::UnsupportedVersion);

    auto dtype = bytes;
    dtype[h.header_bytes() - 1] = 1;
    CHECK(kind_of([&] { read_dump(write_bytes("dtype.satd", dtype)); }) == ErrorKind::UnsupportedDtype);

    auto long_name = bytes;
    long_name[6] = 0x01;
    long_name[7] = 0x01;  // 257
    CHECK(kind_of([&] { read_dump(write_bytes("name.satd", long_name)); }) == ErrorKind::OversizedName);

    CHECK(kind_of([&] { encode_dump({std::string(257, 'n'), {1, 1}, kDtypeFloat32}, std::vector<float>{0.f}); }) ==
          ErrorKind::OversizedName);
    CHECK(kind_of([&] { encode_dump({"n", {1, 1, 1}, kDtypeFloat32}, std::vector<float>{0.f}); }) ==
          ErrorKind::BadLayout);
    CHECK(kind_of([&] { encode_dump({"n", {2, 2}, kDtypeFloat32}, std::vector<float>{0.f}); }) ==
          ErrorKind::ShapeMismatch);
    CHECK_NOTHROW(encode_dump({std::string(256, 'n'), {1, 1}, kDtypeFloat32}, std::vector<float>{0.f}));
}

TEST_CASE("manifest round-trip") {
    TempDir dir;
    Manifest m;
    m.layers = {{"conv1", "conv1.satd"}, {"fc", "fc.satd"}};
    m.source = "unit test";
    write_manifest(dir / "manifest.json", m);
    const auto back = read_manifest(dir / "manifest.json");
    CHECK(back.layers.size() == 2);
    CHECK(back.layers[1].layer == "fc");
    CHECK(back.layers[1].file == "fc.satd");
    CHECK(back.activation == "post");
    CHECK(back.conv_layout == "spatial-positions-as-samples");
    CHECK(back.source == "unit test");

    write_text(dir / "bad.json", R"({"format":"SATD","version":1})");
    CHECK(kind_of([&] { read_manifest(dir / "bad.json"); }) == ErrorKind::MissingField);
    write_text(dir / "broken.json", "{");
    CHECK(kind_of([&] { read_manifest(dir / "broken.json"); }) == ErrorKind::ParseError);
}

TEST_CASE("report: empty and single-row output") {
    const std::vector<ReportRow> none;
    CHECK(emit_report(none, ReportFormat::Csv) == "run_id,layer,metric,epoch,value\n");
    CHECK(emit_report(none, ReportFormat::Json) == "[]\n");

    const std::vector<ReportRow> one = {{"r1", "conv1", Metric::Saturation, 3, 0.25}};
    CHECK(emit_report(one, ReportFormat::Csv) == "run_id,layer,metric,epoch,value\nr1,conv1,saturation,3,0.25\n");
}

TEST_CASE("report: RFC 4180 quoting and absent epochs") {
    const std::vector<ReportRow> rows = {{"run,\"a\"", "l 1", Metric::Loss, std::nullopt, 1.5}};
    const std::string csv = emit_report(rows, ReportFormat::Csv);
    CHECK(csv == "run_id,layer,metric,epoch,value\n\"run,\"\"a\"\"\",l 1,loss,,1.5\n");
    CHECK(parse_report_csv(csv) == rows);
}

TEST_CASE("report: three-run sweep sorted like the sort oracle") {
    Rng rng(12);
    std::vector<ReportRow> rows;
    const std::string runs[] = {"scale_8", "scale_1", "scale_2"};
    for (const auto& run : runs)
        for (long e : {3L, 1L, 2L})
            for (const std::string layer : {"conv2", "conv1", "dense"})
                rows.push_back({run, layer, Metric::Saturation, e, rng.uniform()});
    rows.push_back({"scale_1", "mean", Metric::Saturation, std::nullopt, 0.4});

    auto expected = rows;
    // Oracle: insertion sort on the documented key, absent epoch first.
    auto key_less = [](const ReportRow& a, const ReportRow& b) {
        const long ea = a.epoch.value_or(-1), eb = b.epoch.value_or(-1);
        if (a.run_id != b.run_id) return a.run_id < b.run_id;
        if (ea != eb) return ea < eb;
        return a.layer < b.layer;
    };
    for (std::size_t i = 1; i < expected.size(); ++i)
        for (std::size_t j = i; j > 0 && key_less(expected[j], expected[j - 1]); --j)
            std::swap(expected[j], expected[j - 1]);

    CHECK(parse_report_csv(emit_report(rows, ReportFormat::Csv)) == expected);
    CHECK(parse_report_json(emit_report(rows, ReportFormat::Json)) == expected);
}

TEST_CASE("report: JSON and CSV round-trips preserve doubles exactly") {
    Rng rng(5);
    std::vector<ReportRow> rows;
    for (int i = 0; i < 100; ++i) {
        rows.push_back({"run" + std::to_string(i % 7), "layer" + std::to_string(i % 5), Metric::Loss,
                        i % 3 ? std::optional<long>(i) : std::nullopt, std::exp(rng.normal() * 20.0)});
    }
    sort_rows(rows);
    CHECK(parse_report_json(emit_report(rows, ReportFormat::Json)) == rows);
    CHECK(parse_report_csv(emit_report(rows, ReportFormat::Csv)) == rows);
    for (double v : {0.1, 1.0 / 3.0, 1e-300, 123456789.125, 0.0}) CHECK(std::stod(format_double(v)) == v);
    CHECK(format_double(0.25) == "0.25");
}

TEST_CASE("report: invalid rows") {
    CHECK(kind_of([] { validate_row({"r", "l", Metric::Saturation, 1, 1.5}); }) == ErrorKind::InvalidRow);
    CHECK(kind_of([] { validate_row({"r", "l", Metric::ProbeAccuracy, 1, -0.1}); }) == ErrorKind::InvalidRow);
    CHECK(kind_of([] { validate_row({"r", "l", Metric::Loss, 1, NAN}); }) == ErrorKind::InvalidRow);
    CHECK_NOTHROW(validate_row({"r", "l", Metric::Loss, 1, 12.0}));
    CHECK(kind_of([] { parse_report_csv("a,b\n"); }) == ErrorKind::ParseError);
    CHECK(kind_of([] { parse_metric("entropy"); }) == ErrorKind::InvalidRow);
}

TEST_CASE("architecture: grammar") {
    const auto a = parse_architecture("c1 conv kernel=3 stride=1 padding=1");
    REQUIRE(a.size() == 1);
    CHECK(a[0].name == "c1");
    CHECK(a[0].kind == rf::LayerKind::Conv);
    CHECK(a[0].kernel == 3);
    CHECK(a[0].stride == 1);
    CHECK(a[0].padding == 1);

    const auto b = parse_architecture("# comment\n\np pool kernel=2 stride=2  # trailing\nfc dense units=10\n");
    REQUIRE(b.size() == 2);
    CHECK(b[0].kind == rf::LayerKind::Pool);
    CHECK(b[1].kind == rf::LayerKind::Dense);

    CHECK(kind_of([] { parse_architecture(""); }) == ErrorKind::EmptyArchitecture);
    CHECK(kind_of([] { parse_architecture("# nothing\n"); }) == ErrorKind::EmptyArchitecture);
    CHECK(kind_of([] { parse_architecture("c1 spiral kernel=3"); }) == ErrorKind::UnknownKind);
    CHECK(kind_of([] { parse_architecture("c1 conv stride=2"); }) == ErrorKind::MissingField);
    CHECK(kind_of([] { parse_architecture("c1 conv kernel=x"); }) == ErrorKind::ParseError);
    CHECK(kind_of([] { parse_architecture("fc dense units=4\nc1 conv kernel=3"); }) ==
          ErrorKind::IllFormedArchitecture);
    try {
        parse_architecture("c1 conv kernel=3\nc2 conv kernel=3 colour=red\n");
        FAIL("expected ParseError");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::ParseError);
        CHECK(std::string(e.what()).find("line 2") != std::string::npos);
    }
}

TEST_CASE("key-value config file") {
    const auto f = KeyValueFile::parse("# run\nrun_id = a\nlayer = dense units=4\nlayer = classifier\n  seed=3  \n");
    CHECK(f.get("run_id") == "a");
    CHECK(f.get_all("layer") == std::vector<std::string>{"dense units=4", "classifier"});
    CHECK(f.get("seed") == "3");
    CHECK_FALSE(f.contains("epochs"));
    CHECK(f.canonical() == "run_id = a\nlayer = dense units=4\nlayer = classifier\nseed = 3\n");
    // Comments and spacing do not change the hash.
    const auto g = KeyValueFile::parse("run_id=a\nlayer =  dense units=4 # four\nlayer=classifier\nseed = 3");
    CHECK(fnv1a_hex(f.canonical()) == fnv1a_hex(g.canonical()));
    CHECK(fnv1a_hex("") == "cbf29ce484222325");
    CHECK(kind_of([] { KeyValueFile::parse("no equals sign"); }) == ErrorKind::ParseError);
}

TEST_CASE("dump: streaming writer matches the one-shot encoder") {
    TempDir dir;
    Rng rng(19);
    Tensor t({5, 2, 3, 3});
    for (auto& v : t.values()) v = rng.normal();
    ActivationDumpHeader h{"conv", {5, 2, 3, 3}, kDtypeFloat32};
    {
        DumpWriter w(dir / "w.satd", h);
        w.append(t.gather(std::vector<std::size_t>{0, 1}));
        w.append(t.gather(std::vector<std::size_t>{2, 3, 4}));
        w.close();
    }
    write_dump(dir / "o.satd", "conv", t);
    CHECK(file_bytes(dir / "w.satd") == file_bytes(dir / "o.satd"));

    DumpWriter short_writer(dir / "s.satd", h);
    short_writer.append(t.gather(std::vector<std::size_t>{0}));
    CHECK(kind_of([&] { short_writer.close(); }) == ErrorKind::ShapeMismatch);
    DumpWriter wrong(dir / "x.satd", h);
    CHECK(kind_of([&] { wrong.append(Tensor({1, 3, 3, 3})); }) == ErrorKind::ShapeMismatch);
}
