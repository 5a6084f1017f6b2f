if __name__ == "__main__":
    import uvicorn

    from src import config

    uvicorn.run("src.main:app", host=config.API_HOST, port=config.API_PORT, reload=config.API_RELOAD)
