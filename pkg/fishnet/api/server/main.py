from fastapi import APIRouter

from fishnet.api.server.endpoints import posts, site, submissions

server_router = APIRouter()


server_router.include_router(submissions.router, tags=["Data Submission"])
server_router.include_router(posts.router, tags=["Posts"])
server_router.include_router(site.router, tags=["Site"])
