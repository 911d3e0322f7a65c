// Minimal Y4M <-> H.264/H.265 transcoder speaking the ffmpeg CLI subset the
// evaluation harness pins in its templates:
//
//   scene-y4mcodec -version
//   scene-y4mcodec -y -i in.y4m -c:v libx264|libx265 -qp N -preset P out.mp4
//   scene-y4mcodec -y -i in.mp4 out.y4m
//
// Y4M parsing/writing is done here (C444/C420, 8-bit); compression goes
// through libavcodec, container I/O through libavformat. Single-threaded
// codecs for reproducible bitstreams.

extern "C" {
#include <libavcodec/avcodec.h>
#include <libavformat/avformat.h>
#include <libavutil/opt.h>
#include <libavutil/pixdesc.h>
}

#include <cstdio>
#include <cstring>
#include <fstream>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

namespace {

struct Args {
    bool version = false;
    std::string input;
    std::string codec;
    std::string preset = "medium";
    int qp = -1;
    std::string output;
};

[[noreturn]] void die(const std::string& msg) {
    std::fprintf(stderr, "scene-y4mcodec: %s\n", msg.c_str());
    std::exit(1);
}

std::string av_err(int code) {
    char buf[AV_ERROR_MAX_STRING_SIZE] = {};
    av_strerror(code, buf, sizeof(buf));
    return buf;
}

void check(int code, const char* what) {
    if (code < 0) {
        die(std::string(what) + ": " + av_err(code));
    }
}

Args parse_args(int argc, char** argv) {
    Args a;
    for (int i = 1; i < argc; ++i) {
        const std::string arg = argv[i];
        auto next = [&](const char* flag) -> std::string {
            if (i + 1 >= argc) {
                die(std::string("missing value after ") + flag);
            }
            return argv[++i];
        };
        if (arg == "-version" || arg == "--version") {
            a.version = true;
        } else if (arg == "-y" || arg == "-hide_banner" || arg == "-nostdin") {
            // accepted for ffmpeg compatibility; output is always overwritten
        } else if (arg == "-i") {
            a.input = next("-i");
        } else if (arg == "-c:v" || arg == "-codec:v" || arg == "-vcodec") {
            a.codec = next("-c:v");
        } else if (arg == "-qp") {
            a.qp = std::stoi(next("-qp"));
        } else if (arg == "-preset") {
            a.preset = next("-preset");
        } else if (!arg.empty() && arg[0] == '-') {
            die("unsupported option '" + arg + "'");
        } else {
            if (!a.output.empty()) {
                die("multiple outputs given: '" + a.output + "' and '" + arg + "'");
            }
            a.output = arg;
        }
    }
    return a;
}

bool ends_with(const std::string& s, const std::string& suffix) {
    return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(),
                                                  suffix) == 0;
}

// ---- Y4M reader --------------------------------------------------------------

struct Y4mInput {
    std::ifstream file;
    int width = 0;
    int height = 0;
    int fps_num = 30;
    int fps_den = 1;
    AVPixelFormat pix_fmt = AV_PIX_FMT_NONE;

    explicit Y4mInput(const std::string& path) : file(path, std::ios::binary) {
        if (!file) {
            die("cannot open " + path);
        }
        std::string header;
        if (!std::getline(file, header) || header.rfind("YUV4MPEG2", 0) != 0) {
            die(path + " is not a YUV4MPEG2 stream");
        }
        std::string chroma = "420";
        std::size_t pos = 9;
        while (pos < header.size()) {
            while (pos < header.size() && header[pos] == ' ') {
                ++pos;
            }
            std::size_t end = header.find(' ', pos);
            if (end == std::string::npos) {
                end = header.size();
            }
            const std::string tok = header.substr(pos, end - pos);
            pos = end;
            if (tok.empty()) {
                continue;
            }
            if (tok[0] == 'W') {
                width = std::stoi(tok.substr(1));
            } else if (tok[0] == 'H') {
                height = std::stoi(tok.substr(1));
            } else if (tok[0] == 'F') {
                const auto colon = tok.find(':');
                fps_num = std::stoi(tok.substr(1, colon - 1));
                fps_den = std::stoi(tok.substr(colon + 1));
            } else if (tok[0] == 'C') {
                chroma = tok.substr(1);
            }
        }
        if (width <= 0 || height <= 0) {
            die(path + ": bad Y4M header");
        }
        if (chroma.rfind("444", 0) == 0) {
            pix_fmt = AV_PIX_FMT_YUV444P;
        } else if (chroma.rfind("420", 0) == 0) {
            pix_fmt = AV_PIX_FMT_YUV420P;
        } else {
            die(path + ": unsupported chroma C" + chroma);
        }
    }

    bool read_frame(AVFrame* frame) {
        std::string marker;
        if (!std::getline(file, marker)) {
            return false;
        }
        if (marker.rfind("FRAME", 0) != 0) {
            die("expected FRAME marker in Y4M stream");
        }
        const bool is444 = pix_fmt == AV_PIX_FMT_YUV444P;
        const int cw = is444 ? width : width / 2;
        const int ch = is444 ? height : height / 2;
        auto read_plane = [&](std::uint8_t* dst, int linesize, int w, int h) {
            std::vector<char> row(static_cast<std::size_t>(w));
            for (int y = 0; y < h; ++y) {
                file.read(row.data(), w);
                std::memcpy(dst + static_cast<std::ptrdiff_t>(y) * linesize, row.data(),
                            static_cast<std::size_t>(w));
            }
        };
        read_plane(frame->data[0], frame->linesize[0], width, height);
        read_plane(frame->data[1], frame->linesize[1], cw, ch);
        read_plane(frame->data[2], frame->linesize[2], cw, ch);
        if (!file) {
            die("truncated Y4M frame");
        }
        return true;
    }
};

// ---- encode: y4m -> mp4 --------------------------------------------------------

int run_encode(const Args& a) {
    if (a.codec != "libx264" && a.codec != "libx265") {
        die("-c:v must be libx264 or libx265, got '" + a.codec + "'");
    }
    if (a.qp < 0) {
        die("-qp is required for encoding");
    }
    Y4mInput y4m(a.input);

    const AVCodec* codec = avcodec_find_encoder_by_name(a.codec.c_str());
    if (!codec) {
        die("encoder " + a.codec + " not available in this libavcodec build");
    }
    AVCodecContext* enc = avcodec_alloc_context3(codec);
    enc->width = y4m.width;
    enc->height = y4m.height;
    enc->pix_fmt = y4m.pix_fmt;
    enc->time_base = AVRational{y4m.fps_den, y4m.fps_num};
    enc->framerate = AVRational{y4m.fps_num, y4m.fps_den};
    enc->thread_count = 1;

    AVFormatContext* mux = nullptr;
    check(avformat_alloc_output_context2(&mux, nullptr, nullptr, a.output.c_str()),
          "output context");
    if (mux->oformat->flags & AVFMT_GLOBALHEADER) {
        enc->flags |= AV_CODEC_FLAG_GLOBAL_HEADER;
    }

    AVDictionary* opts = nullptr;
    av_dict_set_int(&opts, "qp", a.qp, 0);
    av_dict_set(&opts, "preset", a.preset.c_str(), 0);
    if (a.codec == "libx265") {
        av_dict_set(&opts, "x265-params", "log-level=error", 0);
    }
    check(avcodec_open2(enc, codec, &opts), "open encoder");
    av_dict_free(&opts);

    AVStream* stream = avformat_new_stream(mux, nullptr);
    check(avcodec_parameters_from_context(stream->codecpar, enc), "stream params");
    stream->time_base = enc->time_base;
    stream->avg_frame_rate = enc->framerate;
    stream->r_frame_rate = enc->framerate;

    check(avio_open(&mux->pb, a.output.c_str(), AVIO_FLAG_WRITE), "open output");
    check(avformat_write_header(mux, nullptr), "write header");

    AVFrame* frame = av_frame_alloc();
    frame->width = enc->width;
    frame->height = enc->height;
    frame->format = enc->pix_fmt;
    check(av_frame_get_buffer(frame, 0), "frame buffer");
    AVPacket* pkt = av_packet_alloc();

    auto drain = [&]() {
        while (true) {
            const int rc = avcodec_receive_packet(enc, pkt);
            if (rc == AVERROR(EAGAIN) || rc == AVERROR_EOF) {
                return;
            }
            check(rc, "receive packet");
            if (pkt->duration == 0) {
                pkt->duration = 1;  // one frame in encoder time base
            }
            av_packet_rescale_ts(pkt, enc->time_base, stream->time_base);
            pkt->stream_index = stream->index;
            check(av_interleaved_write_frame(mux, pkt), "write packet");
        }
    };

    std::int64_t pts = 0;
    while (true) {
        check(av_frame_make_writable(frame), "frame writable");
        if (!y4m.read_frame(frame)) {
            break;
        }
        frame->pts = pts++;
        check(avcodec_send_frame(enc, frame), "send frame");
        drain();
    }
    check(avcodec_send_frame(enc, nullptr), "flush encoder");
    drain();
    check(av_write_trailer(mux), "write trailer");

    av_packet_free(&pkt);
    av_frame_free(&frame);
    avcodec_free_context(&enc);
    avio_closep(&mux->pb);
    avformat_free_context(mux);
    return 0;
}

// ---- decode: mp4 -> y4m --------------------------------------------------------

int run_decode(const Args& a) {
    AVFormatContext* demux = nullptr;
    check(avformat_open_input(&demux, a.input.c_str(), nullptr, nullptr), "open input");
    check(avformat_find_stream_info(demux, nullptr), "stream info");
    const int stream_index = av_find_best_stream(demux, AVMEDIA_TYPE_VIDEO, -1, -1, nullptr, 0);
    if (stream_index < 0) {
        die("no video stream in " + a.input);
    }
    AVStream* stream = demux->streams[stream_index];
    const AVCodec* codec = avcodec_find_decoder(stream->codecpar->codec_id);
    if (!codec) {
        die("no decoder for stream codec");
    }
    AVCodecContext* dec = avcodec_alloc_context3(codec);
    check(avcodec_parameters_to_context(dec, stream->codecpar), "decoder params");
    dec->thread_count = 1;
    check(avcodec_open2(dec, codec, nullptr), "open decoder");

    std::ofstream out(a.output, std::ios::binary | std::ios::trunc);
    if (!out) {
        die("cannot open " + a.output);
    }

    AVRational fps = stream->avg_frame_rate;
    if (fps.num <= 0 || fps.den <= 0) {
        fps = stream->r_frame_rate;
    }
    if (fps.num <= 0 || fps.den <= 0) {
        fps = AVRational{30, 1};
    }

    bool header_written = false;
    AVPacket* pkt = av_packet_alloc();
    AVFrame* frame = av_frame_alloc();

    auto write_frames = [&]() {
        while (true) {
            const int rc = avcodec_receive_frame(dec, frame);
            if (rc == AVERROR(EAGAIN) || rc == AVERROR_EOF) {
                return;
            }
            check(rc, "receive frame");
            AVPixelFormat fmt = static_cast<AVPixelFormat>(frame->format);
            if (fmt == AV_PIX_FMT_YUVJ444P) {
                fmt = AV_PIX_FMT_YUV444P;
            }
            if (fmt == AV_PIX_FMT_YUVJ420P) {
                fmt = AV_PIX_FMT_YUV420P;
            }
            if (fmt != AV_PIX_FMT_YUV444P && fmt != AV_PIX_FMT_YUV420P) {
                die(std::string("unsupported decoded pixel format ") +
                    av_get_pix_fmt_name(static_cast<AVPixelFormat>(frame->format)));
            }
            const bool is444 = fmt == AV_PIX_FMT_YUV444P;
            if (!header_written) {
                out << "YUV4MPEG2 W" << frame->width << " H" << frame->height << " F" << fps.num
                    << ":" << fps.den << " Ip A1:1 C" << (is444 ? "444" : "420mpeg2") << "\n";
                header_written = true;
            }
            out << "FRAME\n";
            const int cw = is444 ? frame->width : frame->width / 2;
            const int ch = is444 ? frame->height : frame->height / 2;
            auto write_plane = [&](const std::uint8_t* src, int linesize, int w, int h) {
                for (int y = 0; y < h; ++y) {
                    out.write(reinterpret_cast<const char*>(src +
                                                            static_cast<std::ptrdiff_t>(y) *
                                                                linesize),
                              w);
                }
            };
            write_plane(frame->data[0], frame->linesize[0], frame->width, frame->height);
            write_plane(frame->data[1], frame->linesize[1], cw, ch);
            write_plane(frame->data[2], frame->linesize[2], cw, ch);
        }
    };

    while (av_read_frame(demux, pkt) >= 0) {
        if (pkt->stream_index == stream_index) {
            check(avcodec_send_packet(dec, pkt), "send packet");
            write_frames();
        }
        av_packet_unref(pkt);
    }
    check(avcodec_send_packet(dec, nullptr), "flush decoder");
    write_frames();

    if (!header_written) {
        die("no frames decoded from " + a.input);
    }
    out.flush();
    if (!out) {
        die("short write: " + a.output);
    }

    av_packet_free(&pkt);
    av_frame_free(&frame);
    avcodec_free_context(&dec);
    avformat_close_input(&demux);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    const Args args = parse_args(argc, argv);
    if (args.version) {
        std::printf("scene-y4mcodec 1.0 (libavcodec %s)\n", AV_STRINGIFY(LIBAVCODEC_VERSION));
        return 0;
    }
    if (args.input.empty() || args.output.empty()) {
        die("usage: -y -i INPUT [-c:v libx264|libx265 -qp N -preset P] OUTPUT");
    }
    try {
        if (ends_with(args.output, ".y4m")) {
            return run_decode(args);
        }
        return run_encode(args);
    } catch (const std::exception& e) {
        die(e.what());
    }
}
