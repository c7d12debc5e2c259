from typing import Generic, List, TypeVar

from pydantic import BaseModel

T = TypeVar("T")


class PageMetadata(BaseModel):
    total_elements: int
    # counted for the visitor the page was served to
    masked: int = 0
    tagged: int = 0


class Page(BaseModel, Generic[T]):
    data: List[T]
    metadata: PageMetadata
