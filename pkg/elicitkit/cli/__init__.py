# CLI 
