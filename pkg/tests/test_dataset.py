import gzip

import orjson
import pytest

from fishnet.crawler.dataset import DatasetRecord, read_dataset, write_dataset


def record(content="hello", tagged=True, **overrides):
    fields = dict(
        url="http://site.test/posts",
        selector="div.article-contents > p.post-body",
        content=content,
        crawl_time=1.5,
        crawler="Googlebot",
    )
    if tagged:
        fields.update(consent_tag_hash="ab" * 32, consent_tag_sig="cd" * 96)
    fields.update(overrides)
    return DatasetRecord(**fields)


def test_written_lines_keep_field_order_and_omit_absent_tags(tmp_path):
    path = tmp_path / "out.jsonl.gz"
    summary = write_dataset([record(), record("plain", tagged=False)], path)
    assert summary.count == 2 and summary.bytes == path.stat().st_size
    with gzip.open(path, "rb") as handle:
        first, second = [orjson.loads(line) for line in handle]
    assert list(first) == [
        "url", "selector", "content", "consent_tag_hash", "consent_tag_sig", "crawl_time", "crawler", "masked",
    ]
    assert "consent_tag_hash" not in second
    assert read_dataset(path) == [record(), record("plain", tagged=False)]


def test_archives_are_byte_stable(tmp_path):
    write_dataset([record()], tmp_path / "a.gz")
    write_dataset([record()], tmp_path / "b.gz")
    assert (tmp_path / "a.gz").read_bytes() == (tmp_path / "b.gz").read_bytes()
    assert not list(tmp_path.glob("*.partial"))


def test_half_tag_records_are_invalid():
    with pytest.raises(ValueError):
        record(tagged=False, consent_tag_hash="ab" * 32)


def test_unknown_fields_are_refused():
    with pytest.raises(ValueError):
        DatasetRecord.from_dict({**record().to_dict(), "extra": 1})
